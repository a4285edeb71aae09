#include "avfm/agent_protocol.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "avfm/io_util.hpp"

namespace avfm {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string replace_all(std::string text, const std::string& token, const std::string& value) {
  size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

// Drops one leading and one trailing ``` fence line if present.
std::string strip_one_fence(const std::string& raw) {
  std::string t = trim(raw);
  if (t.rfind("```", 0) == 0) {
    const size_t eol = t.find('\n');
    t = eol == std::string::npos ? "" : t.substr(eol + 1);
  }
  if (t.size() >= 3 && t.compare(t.size() - 3, 3, "```") == 0) {
    const size_t bol = t.rfind('\n');
    t = bol == std::string::npos ? "" : t.substr(0, bol);
  }
  return trim(t);
}

}  // namespace

PromptVariant prompt_variant_from_string(const std::string& name) {
  if (name == "filter_gpt5") return PromptVariant::filter_gpt5;
  if (name == "filter_gemini") return PromptVariant::filter_gemini;
  if (name == "filter_topk") return PromptVariant::filter_topk;
  if (name == "scene_annotation") return PromptVariant::scene_annotation;
  throw ValidationError("unknown prompt variant: " + name);
}

const char* to_string(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::filter_gpt5: return "filter_gpt5";
    case PromptVariant::filter_gemini: return "filter_gemini";
    case PromptVariant::filter_topk: return "filter_topk";
    case PromptVariant::scene_annotation: return "scene_annotation";
  }
  return "unknown";
}

std::string render_prompt(PromptVariant variant, const std::string& scene,
                          const std::vector<std::string>& object_names, std::optional<int> k) {
  std::string text = prompt_template(variant);
  if (variant == PromptVariant::scene_annotation) return text;  // no placeholders

  if (trim(scene).empty()) throw ValidationError("render_prompt: scene must be nonempty");
  if (object_names.empty()) throw ValidationError("render_prompt: object names must be nonempty");
  if (variant == PromptVariant::filter_topk) {
    if (!k) throw ValidationError("render_prompt: top-k variant requires k");
    if (*k <= 0) throw ValidationError("render_prompt: k must be positive");
    text = replace_all(std::move(text), "$k", std::to_string(*k));
  }
  text = replace_all(std::move(text), "$object_names", join(object_names, ", "));
  text = replace_all(std::move(text), "$scene", scene);

  for (const char* leftover : {"$scene", "$object_names", "$k"}) {
    if (text.find(leftover) != std::string::npos)
      throw ValidationError(std::string("render_prompt: unexpanded placeholder ") + leftover);
  }
  return text;
}

std::vector<std::string> FilterResponse::kept() const {
  std::vector<std::string> out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (verdicts[i]) out.push_back(names[i]);
  }
  return out;
}

std::set<std::string> FilterResponse::kept_set() const {
  std::set<std::string> out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (verdicts[i]) out.insert(names[i]);
  }
  return out;
}

std::string FilterResponse::to_json() const {
  ordered_json j = ordered_json::object();
  for (size_t i = 0; i < names.size(); ++i) j[names[i]] = static_cast<int>(verdicts[i]);
  return j.dump();
}

FilterResponse parse_filter_response(const std::string& raw_text,
                                     const std::vector<std::string>& expected_names,
                                     PromptVariant variant, std::optional<int> k) {
  if (expected_names.empty())
    throw ValidationError("parse_filter_response: expected names must be nonempty");
  {
    std::set<std::string> unique(expected_names.begin(), expected_names.end());
    if (unique.size() != expected_names.size())
      throw ValidationError("parse_filter_response: expected names contain duplicates");
  }

  // The Gemini prompt demands raw braces, but real responses drift into
  // fences; tolerate exactly one.
  const std::string body =
      variant == PromptVariant::filter_gemini ? strip_one_fence(raw_text) : raw_text;

  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ProtocolError(ProtocolFault::malformed, "response is not a JSON object");

  std::vector<std::string> missing, extra;
  for (const std::string& name : expected_names) {
    if (!j.contains(name)) missing.push_back(name);
  }
  {
    const std::set<std::string> expected(expected_names.begin(), expected_names.end());
    for (const auto& [key, _] : j.items()) {
      if (!expected.count(key)) extra.push_back(key);
    }
  }
  if (!missing.empty() || !extra.empty()) {
    std::string what = "key set mismatch";
    if (!missing.empty()) what += "; missing: " + join(missing, ", ");
    if (!extra.empty()) what += "; extra: " + join(extra, ", ");
    throw ProtocolError(ProtocolFault::keys, what);
  }

  FilterResponse response;
  response.names = expected_names;
  response.verdicts.resize(expected_names.size(), 0);
  for (size_t i = 0; i < expected_names.size(); ++i) {
    const json& v = j.at(expected_names[i]);
    if (!v.is_number_integer() && !v.is_number_unsigned())
      throw ProtocolError(ProtocolFault::value,
                          "value for " + expected_names[i] + " must be an integer 0 or 1");
    const std::int64_t value = v.get<std::int64_t>();
    if (value != 0 && value != 1)
      throw ProtocolError(ProtocolFault::value, "value for " + expected_names[i] + " is " +
                                                    std::to_string(value) + ", must be 0 or 1");
    response.verdicts[i] = static_cast<std::uint8_t>(value);
  }

  if (variant == PromptVariant::filter_topk) {
    if (!k) throw ValidationError("parse_filter_response: top-k variant requires k");
    const size_t kept = static_cast<size_t>(
        std::count(response.verdicts.begin(), response.verdicts.end(), std::uint8_t{1}));
    if (kept > static_cast<size_t>(*k))
      throw ProtocolError(ProtocolFault::topk_overflow,
                          "kept " + std::to_string(kept) + " classes, limit is " +
                              std::to_string(*k));
  }
  return response;
}

SceneAnnotation parse_scene_annotation(const std::string& raw_text) {
  const std::string t = trim(raw_text);
  if (t.empty()) throw ProtocolError(ProtocolFault::malformed, "empty scene annotation");
  if (t.rfind("```", 0) == 0)
    throw ProtocolError(ProtocolFault::malformed, "scene annotation is fenced");
  if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                        (t.front() == '\'' && t.back() == '\'')))
    throw ProtocolError(ProtocolFault::malformed, "scene annotation is quoted");
  const std::string phrase = normalize_scene_phrase(t);
  const size_t words = static_cast<size_t>(std::count(phrase.begin(), phrase.end(), ' ')) + 1;
  if (words > 3)
    throw ProtocolError(ProtocolFault::malformed,
                        "scene annotation has " + std::to_string(words) + " words, limit is 3");
  return {phrase};
}

FilterScore score_filter(const std::vector<FilterResponse>& responses,
                         const std::vector<std::set<std::string>>& present_sets) {
  if (responses.size() != present_sets.size())
    throw ValidationError("score_filter: responses and ground truth differ in length");
  if (responses.empty()) throw ValidationError("score_filter: no samples");

  FilterScore score;
  for (size_t i = 0; i < responses.size(); ++i) {
    const std::set<std::string> kept = responses[i].kept_set();
    const std::set<std::string>& present = present_sets[i];
    size_t hit = 0;
    for (const std::string& name : kept) hit += present.count(name);
    const double recall =
        present.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(present.size());
    const double precision =
        kept.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(kept.size());
    score.per_sample.emplace_back(recall, precision);
    score.recall += recall;
    score.precision += precision;
  }
  score.recall /= static_cast<double>(responses.size());
  score.precision /= static_cast<double>(responses.size());
  return score;
}

MockAgentTable mock_table_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    MockAgentTable table;
    for (const auto& [scene, entry] : j.at("scenes").items()) {
      MockAgentTable::SceneEntry e;
      e.annotation = entry.value("annotation", scene);
      for (const auto& cls : entry.at("kept")) e.kept.insert(cls.get<std::string>());
      table.scenes[scene] = std::move(e);
    }
    return table;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mock table JSON: ") + e.what());
  }
}

MockAgentTable load_mock_table(const std::string& path) {
  return mock_table_from_json(read_file(path));
}

MockAgentClient::MockAgentClient(MockAgentTable table, std::string annotation_scene)
    : table_(std::move(table)), annotation_scene_(std::move(annotation_scene)) {}

std::string MockAgentClient::request(const std::string& prompt) {
  const std::string scene_marker = " a scene of ";
  const size_t scene_pos = prompt.find(scene_marker);

  if (scene_pos == std::string::npos) {
    // Annotation prompt: carries no scene text, answered for the scene
    // configured at construction.
    if (annotation_scene_.empty())
      throw TransportError("mock: annotation request without a configured scene");
    const auto it = table_.scenes.find(annotation_scene_);
    if (it == table_.scenes.end())
      throw TransportError("mock: scene not in table: " + annotation_scene_);
    return it->second.annotation;
  }

  const size_t scene_start = scene_pos + scene_marker.size();
  const size_t scene_end = prompt.find(".\n", scene_start);
  if (scene_end == std::string::npos) throw TransportError("mock: cannot parse scene from prompt");
  const std::string scene = prompt.substr(scene_start, scene_end - scene_start);

  const std::string names_marker = "Object names:\n";
  const size_t names_pos = prompt.find(names_marker);
  if (names_pos == std::string::npos)
    throw TransportError("mock: cannot find object names in prompt");
  const size_t names_start = names_pos + names_marker.size();
  size_t names_end = prompt.find(".\n", names_start);
  if (names_end == std::string::npos) names_end = prompt.size();
  std::vector<std::string> names;
  for (const std::string& part : split(prompt.substr(names_start, names_end - names_start), ','))
    names.push_back(trim(part));

  const auto it = table_.scenes.find(scene);
  if (it == table_.scenes.end()) throw TransportError("mock: scene not in table: " + scene);

  FilterResponse response;
  response.names = names;
  for (const std::string& name : names)
    response.verdicts.push_back(it->second.kept.count(name) ? 1 : 0);
  return response.to_json();
}

RemoteAgentConfig load_remote_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
    RemoteAgentConfig config;
    config.endpoint_url = j.at("endpoint_url").get<std::string>();
    config.model_name = j.at("model_name").get<std::string>();
    config.timeout_ms = j.value("timeout_ms", 10000);
    config.max_retries = j.value("max_retries", 2);
    config.api_key_env = j.value("api_key_env", std::string());
    return config;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("remote config JSON: ") + e.what());
  }
}

std::unique_ptr<AgentClient> make_agent_client(const std::string& config_path,
                                               const std::string& annotation_scene) {
  json j;
  try {
    j = json::parse(read_file(config_path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("agent config JSON: ") + e.what());
  }
  if (j.contains("scenes"))
    return std::make_unique<MockAgentClient>(mock_table_from_json(j.dump()), annotation_scene);
  if (j.contains("endpoint_url"))
    return std::make_unique<RemoteAgentClient>(load_remote_config(config_path));
  throw ValidationError("agent config must contain either scenes (mock) or endpoint_url (remote)");
}

}  // namespace avfm
