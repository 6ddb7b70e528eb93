#include "satbench/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "satbench/error.hpp"
#include "satbench/http_backend.hpp"
#include "satbench/recording_store.hpp"

namespace satbench {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> known,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool found = false;
    for (std::string_view k : known) found = found || k == key;
    if (!found) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

Language language_field(const json& j, const std::string& where) {
  const auto language = parse_language(j.get<std::string>());
  if (!language) throw ConfigError(where + ": unknown language " + j.dump());
  return *language;
}

SchemaMap schema_field(const json& j, const std::string& where) {
  try {
    if (j.is_string()) return SchemaMap::parse(j.get<std::string>());
    SchemaMap map;
    reject_unknown_keys(j, {"text", "label", "id", "language", "source"}, where + ".map");
    map.text = j.value("text", map.text);
    map.label = j.value("label", map.label);
    map.id = j.value("id", map.id);
    map.language = j.value("language", map.language);
    map.source = j.value("source", map.source);
    return map;
  } catch (const CorpusError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

BackendConfig backend_field(const json& j, const std::filesystem::path& base, std::size_t index) {
  const std::string where = "backends[" + std::to_string(index) + "]";
  reject_unknown_keys(j,
                      {"name", "kind", "model", "endpoint", "temperature", "max_new_tokens",
                       "analysis_max_new_tokens", "context_budget_tokens", "max_inflight",
                       "max_attempts", "timeout_seconds", "recordings", "mock"},
                      where);
  BackendConfig config;
  BackendDescriptor& d = config.descriptor;
  const auto kind = parse_backend_kind(j.value("kind", std::string("mock")));
  if (!kind) throw ConfigError(where + ": unknown kind " + j.at("kind").dump());
  d.kind = *kind;
  d.model_name = j.value("model", std::string());
  d.name = j.value("name", std::string());
  if (j.contains("endpoint")) d.endpoint_url = j.at("endpoint").get<std::string>();
  d.decoding.temperature = j.value("temperature", d.decoding.temperature);
  d.decoding.max_new_tokens = j.value("max_new_tokens", d.decoding.max_new_tokens);
  d.decoding.context_budget_tokens =
      j.value("context_budget_tokens", d.decoding.context_budget_tokens);
  d.analysis_max_new_tokens = j.value("analysis_max_new_tokens", d.analysis_max_new_tokens);
  d.max_inflight = j.value("max_inflight", d.max_inflight);
  config.max_attempts = j.value("max_attempts", config.max_attempts);
  config.timeout_seconds = j.value("timeout_seconds", config.timeout_seconds);
  if (j.contains("recordings")) {
    config.recordings = resolve(base, j.at("recordings").get<std::string>());
  }
  if (j.contains("mock")) {
    const json& m = j.at("mock");
    reject_unknown_keys(m, {"rule", "response", "marker", "hit", "miss"}, where + ".mock");
    config.mock.rule = m.value("rule", config.mock.rule);
    config.mock.response = m.value("response", config.mock.response);
    config.mock.marker = m.value("marker", config.mock.marker);
    config.mock.hit = m.value("hit", config.mock.hit);
    config.mock.miss = m.value("miss", config.mock.miss);
  }
  if (d.kind == BackendKind::kReplay && !config.recordings) {
    throw ConfigError(where + ": replay backends need 'recordings'");
  }
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return config;
}

DatasetConfig dataset_field(const json& j, const std::filesystem::path& base, std::size_t index) {
  const std::string where = "datasets[" + std::to_string(index) + "]";
  reject_unknown_keys(j, {"name", "path", "satire_path", "nonsatire_path", "language", "format", "map"},
                      where);
  DatasetConfig config;
  config.name = j.value("name", std::string());
  if (config.name.empty()) throw ConfigError(where + ": missing name");
  if (!j.contains("language")) throw ConfigError(where + ": missing language");
  config.language = language_field(j.at("language"), where);
  if (j.contains("path")) config.path = resolve(base, j.at("path").get<std::string>());
  if (j.contains("satire_path")) {
    config.satire_path = resolve(base, j.at("satire_path").get<std::string>());
  }
  if (j.contains("nonsatire_path")) {
    config.nonsatire_path = resolve(base, j.at("nonsatire_path").get<std::string>());
  }
  const bool merged = config.satire_path || config.nonsatire_path;
  if (config.path.has_value() == merged ||
      (merged && !(config.satire_path && config.nonsatire_path))) {
    throw ConfigError(where + ": give either 'path' or both 'satire_path' and 'nonsatire_path'");
  }
  if (j.contains("format")) {
    const auto format = parse_file_format(j.at("format").get<std::string>());
    if (!format) throw ConfigError(where + ": unknown format " + j.at("format").dump());
    config.format = *format;
  }
  if (j.contains("map")) config.schema = schema_field(j.at("map"), where);
  return config;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run configuration is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("run configuration must be a JSON object");

  RunConfig config;
  try {
    reject_unknown_keys(root,
                        {"backends", "datasets", "prompt_languages", "strategies", "select",
                         "sample_size", "seed", "policy", "prompts_dir", "instruction_as_system",
                         "parallel_cells"},
                        "config");
    if (root.contains("backends")) {
      std::size_t i = 0;
      for (const json& b : root.at("backends")) config.backends.push_back(backend_field(b, base_dir, i++));
    }
    if (root.contains("datasets")) {
      std::size_t i = 0;
      for (const json& d : root.at("datasets")) config.datasets.push_back(dataset_field(d, base_dir, i++));
    }
    if (root.contains("prompt_languages")) {
      config.prompt_languages.clear();
      for (const json& l : root.at("prompt_languages")) {
        config.prompt_languages.push_back(language_field(l, "prompt_languages"));
      }
    }
    if (root.contains("strategies")) {
      config.strategies.clear();
      for (const json& s : root.at("strategies")) {
        const auto strategy = parse_strategy(s.get<std::string>());
        if (!strategy) throw ConfigError("strategies: unknown strategy " + s.dump());
        config.strategies.push_back(*strategy);
      }
    }
    if (root.contains("select")) {
      const json& select = root.at("select");
      reject_unknown_keys(select, {"backends", "datasets"}, "select");
      config.select_backends = select.value("backends", std::vector<std::string>{});
      config.select_datasets = select.value("datasets", std::vector<std::string>{});
    }
    if (root.contains("sample_size") && !root.at("sample_size").is_null()) {
      config.sample_size = root.at("sample_size").get<std::size_t>();
    }
    config.seed = root.value("seed", config.seed);
    if (root.contains("policy")) {
      const auto policy = parse_policy(root.at("policy").get<std::string>());
      if (!policy) throw ConfigError("unknown policy " + root.at("policy").dump());
      config.policy = *policy;
    }
    if (root.contains("prompts_dir")) {
      config.prompts_dir = resolve(base_dir, root.at("prompts_dir").get<std::string>());
    }
    config.instruction_as_system = root.value("instruction_as_system", false);
    config.parallel_cells = root.value("parallel_cells", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run configuration: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open run configuration " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  const BackendDescriptor& descriptor = config.descriptor;
  descriptor.validate();

  std::shared_ptr<ChatBackend> base;
  switch (descriptor.kind) {
    case BackendKind::kMock: {
      MockBackend::Rule rule;
      if (config.mock.rule == "constant") {
        rule = MockBackend::constant(config.mock.response);
      } else if (config.mock.rule == "marker") {
        if (config.mock.marker.empty()) throw ConfigError("marker mock needs a marker");
        rule = MockBackend::marker(config.mock.marker, config.mock.hit, config.mock.miss);
      } else {
        throw ConfigError("unknown mock rule '" + config.mock.rule + "'");
      }
      base = std::make_shared<MockBackend>(descriptor, std::move(rule));
      break;
    }
    case BackendKind::kHttpEndpoint: {
      const char* key = std::getenv(std::string(kApiKeyEnvVar).c_str());
      RetryPolicy retry;
      retry.max_attempts = config.max_attempts;
      base = std::make_shared<HttpBackend>(
          descriptor, make_httplib_transport(std::chrono::seconds(config.timeout_seconds)), retry,
          key ? std::string(key) : std::string());
      break;
    }
    case BackendKind::kReplay:
      break;
  }

  if (!config.recordings) return base;
  auto store = std::make_shared<RecordingStore>(*config.recordings);
  return std::make_shared<ReplayBackend>(descriptor, std::move(store), std::move(base));
}

std::vector<Dataset> load_datasets(const RunConfig& config, std::vector<std::string>* warnings) {
  std::vector<Dataset> datasets;
  auto load = [&](const std::filesystem::path& path, const DatasetConfig& d, std::string name) {
    LoadOptions options;
    options.format = d.format;
    options.schema = d.schema;
    options.name = std::move(name);
    options.language = d.language;
    LoadResult result = load_dataset(path, options);
    if (warnings) {
      for (const RowError& error : result.errors) {
        warnings->push_back(path.string() + ":" + std::to_string(error.line) + ": " + error.message);
      }
    }
    return std::move(result.dataset);
  };
  std::set<std::string> names;
  for (const DatasetConfig& d : config.datasets) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name " + d.name);
    if (d.path) {
      datasets.push_back(load(*d.path, d, d.name));
    } else {
      Dataset satire = load(*d.satire_path, d, d.satire_path->stem().string());
      Dataset nonsatire = load(*d.nonsatire_path, d, d.nonsatire_path->stem().string());
      datasets.push_back(merge_balanced(satire, nonsatire, d.name));
    }
  }
  return datasets;
}

}  // namespace satbench
