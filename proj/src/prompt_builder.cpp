#include "simtrans/prompt_builder.hpp"

#include <set>

#include "json.hpp"

#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::prompt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Drops commas that directly precede a closing bracket, outside strings.
std::string strip_trailing_commas(std::string_view doc) {
  std::string out;
  out.reserve(doc.size());
  bool in_string = false;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const char c = doc[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < doc.size()) {
        out.push_back(doc[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < doc.size() && (doc[j] == ' ' || doc[j] == '\t' || doc[j] == '\n' || doc[j] == '\r')) ++j;
      if (j < doc.size() && (doc[j] == ']' || doc[j] == '}')) continue;
    }
    out.push_back(c);
  }
  return out;
}

BackgroundInfo from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("background document must be a JSON object");
  if (!j.contains("topic") || !j["topic"].is_string()) {
    throw SchemaError("background document needs a string \"topic\"");
  }
  BackgroundInfo info;
  info.topic = j["topic"].get<std::string>();
  if (j.contains("named_entities")) {
    const json& ents = j["named_entities"];
    if (!ents.is_array()) throw SchemaError("\"named_entities\" must be an array");
    std::set<std::string> seen;
    for (const auto& e : ents) {
      if (!e.is_object() || !e.contains("entity") || !e["entity"].is_string()) {
        throw SchemaError("each named entity needs a string \"entity\"");
      }
      NamedEntity ne;
      ne.entity = e["entity"].get<std::string>();
      if (ne.entity.empty()) throw SchemaError("empty entity name");
      if (e.contains("description")) {
        if (!e["description"].is_string()) throw SchemaError("entity description must be a string");
        ne.description = e["description"].get<std::string>();
      }
      if (!seen.insert(ne.entity).second) throw SchemaError("duplicate entity \"" + ne.entity + "\"");
      info.named_entities.push_back(std::move(ne));
    }
  }
  return info;
}

// End index (exclusive) of the balanced object starting at `open`, or npos.
std::size_t match_object(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

constexpr std::string_view kExtractionInstruction =
    "Please extract the topic and named entities (which are either proper names, technical terms "
    "or acronyms) from the following text, and return them as a JSON object with the following "
    "fields: topic, named_entities({entity, description}). For example:";

constexpr std::string_view kExtractionExample = R"({
  "topic": "Climate Crisis and Fossil Fuel Industry's Influence",
  "named_entities": [
    {
      "entity": "troposphere",
      "description": "the lowest part of the atmosphere"
    },
    {
      "entity": "gravity-measuring satellite",
      "description": "satellite used to observe water surpluses and deficits"
    },
    {
      "entity": "Inflation Reduction Act",
      "description": "U.S. legislation aimed at addressing climate change"
    },
    {
      "entity": "fossil fuel industry",
      "description": "industry opposing climate legislation"
    },
    {
      "entity": "UN Secretary General",
      "description": "stated fossil fuel industry is the 'polluted heart' of climate crisis"
    },
    {
      "entity": "COP process",
      "description": "Conference of the Parties, climate change conferences"
    },
    {
      "entity": "COP28",
      "description": "upcoming climate conference hosted by UAE"
    },
    {
      "entity": "Sultan Al Jaber",
      "description": "CEO of Abu Dhabi National Oil Company and president of COP28"
    },
    {
      "entity": "Paris Agreement",
      "description": "international treaty on climate change"
    },
    {
      "entity": "Chevron",
      "description": "company with 93"
    },
    {
      "entity": "World Bank",
      "description": "institution needing reform to aid developing countries"
    },
    {
      "entity": "gigafactory",
      "description": "large factory for producing batteries and renewable energy components"
    },
    {
      "entity": "Drew Shindell",
      "description": "researcher on CO2 reduction timelines"
    }
  ]
})";

}  // namespace

void ChatTemplate::validate() const {
  const std::vector<const std::string*> markers{&begin_marker, &header_open, &header_close, &turn_end};
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (markers[i]->empty()) throw PreconditionError("chat template markers must be non-empty");
    for (std::size_t j = i + 1; j < markers.size(); ++j) {
      if (*markers[i] == *markers[j]) throw PreconditionError("chat template markers must be distinct");
    }
  }
}

std::string ChatTemplate::header(std::string_view role) const {
  std::string h = header_open;
  h += role;
  h += header_close;
  return h;
}

std::string serialize_background(const BackgroundInfo& info) {
  ordered_json j;
  j["topic"] = info.topic;
  j["named_entities"] = ordered_json::array();
  for (const auto& e : info.named_entities) {
    ordered_json ej;
    ej["entity"] = e.entity;
    ej["description"] = e.description;
    j["named_entities"].push_back(std::move(ej));
  }
  return j.dump();
}

BackgroundInfo load_background(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& original) {
    try {
      j = json::parse(strip_trailing_commas(document));
    } catch (const json::parse_error&) {
      throw ParseError(std::string("malformed background document: ") + original.what(), original.byte);
    }
  }
  return from_json(j);
}

std::string render_system_message(const PromptSpec& spec) {
  std::string clause;
  if (spec.background) {
    clause = spec.background_clause;
    replace_all(clause, "{BACKGROUND}", serialize_background(*spec.background));
  }
  std::string msg = spec.system_message;
  replace_all(msg, "{BACKGROUND_CLAUSE}", clause);
  replace_all(msg, "{SRC_LANG}", spec.src_lang);
  replace_all(msg, "{TGT_LANG}", spec.tgt_lang);
  return msg;
}

std::string target_block(const PromptSpec& spec) {
  return spec.tgt_lang + " translation: " + text::join_words(spec.partial_target);
}

std::string render_prompt(const PromptSpec& spec, const ChatTemplate& tmpl) {
  if (spec.partial_source.empty()) throw PreconditionError("render_prompt needs a non-empty partial source");
  std::string out = tmpl.begin_marker;
  out += tmpl.header(tmpl.system_role);
  out += '\n';
  out += render_system_message(spec);
  out += '\n';
  out += tmpl.turn_end;
  out += tmpl.header(tmpl.user_role);
  out += '\n';
  out += "Context: ";
  out += text::join_words(spec.partial_source);
  out += '\n';
  if (!spec.priming_enabled) {
    out += target_block(spec);
    out += '\n';
  }
  out += tmpl.turn_end;
  out += tmpl.header(tmpl.assistant_role);
  out += '\n';
  if (spec.priming_enabled) out += target_block(spec);
  return out;
}

std::string build_extraction_prompt(std::string_view full_text) {
  if (text::normalize_whitespace(full_text).empty()) {
    throw PreconditionError("extraction prompt needs non-empty text");
  }
  std::string out(kExtractionInstruction);
  out += "\n\n";
  out += kExtractionExample;
  out += "\n\n";
  out += full_text;
  return out;
}

BackgroundInfo parse_extraction_response(std::string_view response) {
  std::string last_problem = "no JSON object found";
  for (std::size_t open = response.find('{'); open != std::string_view::npos;
       open = response.find('{', open + 1)) {
    const std::size_t close = match_object(response, open);
    if (close == std::string_view::npos) continue;
    try {
      return load_background(response.substr(open, close - open));
    } catch (const ParseError& e) {
      last_problem = e.what();
    } catch (const SchemaError& e) {
      last_problem = e.what();
    }
  }
  throw ExtractionError("no background document in response: " + last_problem);
}

}  // namespace simtrans::prompt
