#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avfm/errors.hpp"

namespace avfm {

enum class PromptVariant { filter_gpt5, filter_gemini, filter_topk, scene_annotation };

PromptVariant prompt_variant_from_string(const std::string& name);
const char* to_string(PromptVariant variant);

// Template body with $scene / $object_names / $k placeholders; identical
// to the text shipped under data/prompts/.
const std::string& prompt_template(PromptVariant variant);

// Substitutes placeholders; object names joined by ", ". The scene
// annotation variant has no placeholders and ignores the arguments.
std::string render_prompt(PromptVariant variant, const std::string& scene,
                          const std::vector<std::string>& object_names,
                          std::optional<int> k = std::nullopt);

// Keep/drop verdicts, key set identical to the request's object names.
struct FilterResponse {
  std::vector<std::string> names;    // request order
  std::vector<std::uint8_t> verdicts;  // 0 or 1, parallel to names

  std::vector<std::string> kept() const;
  std::set<std::string> kept_set() const;
  // JSON object {"name": 0|1, ...} in request order.
  std::string to_json() const;

  friend bool operator==(const FilterResponse&, const FilterResponse&) = default;
};

// Strict parse: JSON object, key set equal to expected_names, integer
// values 0/1 only. The Gemini variant tolerates one surrounding markdown
// fence; filter_topk additionally enforces |kept| <= k.
FilterResponse parse_filter_response(const std::string& raw_text,
                                     const std::vector<std::string>& expected_names,
                                     PromptVariant variant,
                                     std::optional<int> k = std::nullopt);

struct SceneAnnotation {
  std::string phrase;  // normalized: lowercase, single-spaced
};

// Rejects empty, >3 words, surrounding quotes, markdown fences.
SceneAnnotation parse_scene_annotation(const std::string& raw_text);

struct FilterScore {
  double recall = 0.0;
  double precision = 0.0;
  std::vector<std::pair<double, double>> per_sample;  // (recall, precision)
};

// Macro averages; empty denominators score 1 by convention.
FilterScore score_filter(const std::vector<FilterResponse>& responses,
                         const std::vector<std::set<std::string>>& present_sets);

class AgentClient {
 public:
  virtual ~AgentClient() = default;
  virtual std::string request(const std::string& prompt) = 0;
};

// Table format: {scenes:{name:{annotation, kept:[...]}}}
struct MockAgentTable {
  struct SceneEntry {
    std::string annotation;
    std::set<std::string> kept;
  };
  std::map<std::string, SceneEntry> scenes;
};

MockAgentTable load_mock_table(const std::string& path);
MockAgentTable mock_table_from_json(const std::string& text);

// Deterministic offline stand-in. Filtering prompts are answered from the
// scene parsed out of the prompt text; annotation prompts carry no scene,
// so those are answered for the scene given at construction.
class MockAgentClient : public AgentClient {
 public:
  explicit MockAgentClient(MockAgentTable table, std::string annotation_scene = "");
  std::string request(const std::string& prompt) override;

 private:
  MockAgentTable table_;
  std::string annotation_scene_;
};

struct RemoteAgentConfig {
  std::string endpoint_url;  // http://host[:port]/path
  std::string model_name;
  int timeout_ms = 10000;
  int max_retries = 2;
  std::string api_key_env;  // env var NAME holding the bearer token
};

RemoteAgentConfig load_remote_config(const std::string& path);

// POSTs {"model","prompt"} and returns the "text" field of the JSON
// response. Retries with exponential backoff; all transport failures
// surface as TransportError. The API key value is never logged.
class RemoteAgentClient : public AgentClient {
 public:
  explicit RemoteAgentClient(RemoteAgentConfig config);
  std::string request(const std::string& prompt) override;

 private:
  RemoteAgentConfig config_;
};

// Dispatch on config content: a "scenes" key loads the mock, an
// "endpoint_url" key the remote client.
std::unique_ptr<AgentClient> make_agent_client(const std::string& config_path,
                                               const std::string& annotation_scene = "");

}  // namespace avfm
