#include "simtrans/http_backends.hpp"

#include "httplib.h"
#include "json.hpp"

#include "simtrans/datasets.hpp"
#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::http {

using nlohmann::json;

namespace {

httplib::Client make_client(const Endpoint& ep, std::chrono::seconds timeout) {
  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

httplib::Headers auth_headers(const std::string& api_key) {
  httplib::Headers h;
  if (!api_key.empty()) h.emplace("Authorization", "Bearer " + api_key);
  return h;
}

// One decoded completion chunk, in either the OpenAI or llama.cpp shape.
struct Chunk {
  std::string text;
  bool stopped = false;  // model ended its turn
};

Chunk decode_chunk(const json& j) {
  Chunk c;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    if (choice.contains("text") && choice["text"].is_string()) c.text = choice["text"].get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      c.stopped = choice["finish_reason"].get<std::string>() == "stop";
    }
  } else if (j.contains("content") && j["content"].is_string()) {
    c.text = j["content"].get<std::string>();
    if (j.value("stop", false)) c.stopped = j.value("stop_type", std::string("eos")) != "limit";
  } else if (j.contains("error")) {
    throw TransientError("completion server error: " + j["error"].dump());
  }
  return c;
}

void check_reachable(const Endpoint& ep, const std::string& path, const std::string& api_key) {
  auto cli = make_client(ep, std::chrono::seconds(10));
  auto res = cli.Get(ep.path_prefix + path, auth_headers(api_key));
  if (!res) {
    throw TransientError("cannot reach " + ep.origin + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw TransientError(ep.origin + " rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status >= 500) throw TransientError(ep.origin + " answered HTTP " + std::to_string(res->status));
}

}  // namespace

Endpoint Endpoint::parse(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  if (slash != std::string::npos) {
    ep.path_prefix = url.substr(slash);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  return ep;
}

CompletionClient::CompletionClient(CompletionClientConfig cfg)
    : cfg_(std::move(cfg)), endpoint_(Endpoint::parse(cfg_.url)) {}

void CompletionClient::check_ready() { check_reachable(endpoint_, cfg_.models_path, cfg_.api_key); }

void CompletionClient::stream(const llm::GenerationRequest& request, const llm::TokenSink& sink) {
  json body;
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  body["prompt"] = request.prompt;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_new_tokens;
  body["n_predict"] = request.max_new_tokens;
  if (!cfg_.stop.empty()) body["stop"] = cfg_.stop;
  body["stream"] = cfg_.streaming;

  auto cli = make_client(endpoint_, cfg_.timeout);
  httplib::Request req;
  req.method = "POST";
  req.path = endpoint_.path_prefix + cfg_.completions_path;
  req.headers = auth_headers(cfg_.api_key);
  req.headers.emplace("Content-Type", "application/json");
  req.body = body.dump();

  bool sink_done = false;
  auto deliver = [&](const Chunk& c) {
    if (sink_done) return;
    if (!c.text.empty() && !sink(llm::TokenEvent::fragment(c.text))) {
      sink_done = true;
      return;
    }
    if (c.stopped) {
      sink(llm::TokenEvent::end_of_turn());
      sink_done = true;
    }
  };

  if (!cfg_.streaming) {
    auto res = cli.send(req);
    if (!res) throw TransientError("completion request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw TransientError("completion request returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      deliver(decode_chunk(json::parse(res->body)));
    } catch (const json::exception& e) {
      throw TransientError(std::string("unparseable completion response: ") + e.what());
    }
    return;
  }

  std::string pending;
  std::string error_body;
  std::string stream_error;
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    pending.append(data, len);
    std::size_t nl;
    while ((nl = pending.find('\n')) != std::string::npos) {
      std::string line = pending.substr(0, nl);
      pending.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("data:", 0) != 0) {
        if (!line.empty()) error_body += line;
        continue;
      }
      std::string payload = text::normalize_whitespace(line.substr(5)) == "[DONE]" ? "" : line.substr(5);
      if (payload.empty()) continue;
      try {
        deliver(decode_chunk(json::parse(payload)));
      } catch (const std::exception& e) {
        stream_error = e.what();
        return false;
      }
      if (sink_done) return false;
    }
    return true;
  };
  auto res = cli.send(req);
  if (!stream_error.empty()) throw TransientError("bad completion stream: " + stream_error);
  if (sink_done) return;
  if (!res) throw TransientError("completion stream failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransientError("completion stream returned HTTP " + std::to_string(res->status) + ": " + error_body);
  }
}

TranscriptionClient::TranscriptionClient(TranscriptionClientConfig cfg)
    : cfg_(std::move(cfg)), endpoint_(Endpoint::parse(cfg_.url)) {}

void TranscriptionClient::check_ready() { check_reachable(endpoint_, "/", cfg_.api_key); }

std::vector<std::string> TranscriptionClient::transcribe(const asr::AudioTimeline& timeline, Millis prefix_end) {
  const auto* pcm = std::get_if<asr::PcmAudio>(&timeline.source);
  if (pcm == nullptr) throw PreconditionError("live transcription needs an audio timeline");
  const auto n = std::min<std::size_t>(pcm->samples.size(),
                                       static_cast<std::size_t>(prefix_end.count()) * asr::kSampleRate / 1000);
  asr::PcmAudio prefix;
  prefix.samples.assign(pcm->samples.begin(), pcm->samples.begin() + static_cast<std::ptrdiff_t>(n));

  httplib::MultipartFormDataItems items{
      {"file", data::encode_wav(prefix), "prefix.wav", "audio/wav"},
      {"model", cfg_.model, "", ""},
      {"language", cfg_.language, "", ""},
      {"temperature", "0", "", ""},
      {"response_format", "json", "", ""},
  };
  auto cli = make_client(endpoint_, cfg_.timeout);
  auto res = cli.Post(endpoint_.path_prefix + cfg_.transcriptions_path, auth_headers(cfg_.api_key), items);
  if (!res) throw TransientError("transcription request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransientError("transcription returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    const json j = json::parse(res->body);
    return text::split_words(j.at("text").get<std::string>());
  } catch (const json::exception& e) {
    throw TransientError(std::string("unparseable transcription response: ") + e.what());
  }
}

}  // namespace simtrans::http
