#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simtrans::prompt {

/// Special strings flanking each turn. Defaults are the Llama-3 markers.
struct ChatTemplate {
  std::string begin_marker = "<|begin_of_text|>";
  std::string header_open = "<|start_header_id|>";
  std::string header_close = "<|end_header_id|>";
  std::string turn_end = "<|eot_id|>";
  std::string system_role = "system";
  std::string user_role = "user";
  std::string assistant_role = "assistant";

  /// Throws PreconditionError unless markers are non-empty and distinct.
  void validate() const;
  std::string header(std::string_view role) const;
};

struct NamedEntity {
  std::string entity;
  std::string description;
  bool operator==(const NamedEntity&) const = default;
};

/// Per-discourse topic and terminology glossary.
struct BackgroundInfo {
  std::string topic;
  std::vector<NamedEntity> named_entities;
  bool operator==(const BackgroundInfo&) const = default;
};

/// Single-line JSON with `topic` first, as embedded in the system message.
std::string serialize_background(const BackgroundInfo& info);

/// Parses and validates a background document. Trailing commas before a
/// closing bracket are tolerated; unknown fields are ignored. Throws
/// ParseError (with byte position) or SchemaError.
BackgroundInfo load_background(std::string_view document);

/// Placeholders: {SRC_LANG}, {TGT_LANG}, {BACKGROUND_CLAUSE}.
inline constexpr std::string_view kDefaultSystemMessage =
    "You are a conference interpreter. {BACKGROUND_CLAUSE}Taking into account the original "
    "{SRC_LANG} text, complete its translation into {TGT_LANG}. Do not add any notes or comments "
    "to the translation.";

/// Placeholder: {BACKGROUND}. Substituted for {BACKGROUND_CLAUSE} only when a
/// background document is present.
inline constexpr std::string_view kDefaultBackgroundClause =
    "As you translate, you can use the following background information: {BACKGROUND}. ";

struct PromptSpec {
  std::string src_lang = "English";
  std::string tgt_lang = "German";
  std::string system_message{kDefaultSystemMessage};
  std::string background_clause{kDefaultBackgroundClause};
  std::optional<BackgroundInfo> background;
  std::vector<std::string> partial_source;
  std::vector<std::string> partial_target;
  bool priming_enabled = true;
};

std::string render_system_message(const PromptSpec& spec);

/// "<TGT_LANG> translation: " followed by the partial target.
std::string target_block(const PromptSpec& spec);

/// Renders the full prompt. With priming the assistant turn holds the target
/// block and the prompt ends exactly at its last character; without priming
/// the target block closes the user turn and the assistant turn is empty.
std::string render_prompt(const PromptSpec& spec, const ChatTemplate& tmpl = {});

/// Instruction asking a model to extract a background document from `full_text`.
std::string build_extraction_prompt(std::string_view full_text);

/// Finds the first background document in a free-form model response (fenced
/// block or bare object). Throws ExtractionError if none parses.
BackgroundInfo parse_extraction_response(std::string_view response);

}  // namespace simtrans::prompt
