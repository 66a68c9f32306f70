#include "kga/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace kga::harness {
namespace {

template <class E>
struct Named {
  E value;
  const char* name;
};

constexpr Named<TaskKind> kTasks[] = {{TaskKind::kClassification, "classification"},
                                      {TaskKind::kTranslation, "translation"}};
constexpr Named<Method> kMethods[] = {
    {Method::kKga, "kga"}, {Method::kRetrain, "retrain"}, {Method::kSisa, "sisa"}, {Method::kBadt, "badt"}};
constexpr Named<ForgetMode> kModes[] = {
    {ForgetMode::kRandom, "random"}, {ForgetMode::kIds, "ids"}, {ForgetMode::kToken, "token"}, {ForgetMode::kBand, "band"}};
constexpr Named<models::ScheduleKind> kSchedules[] = {{models::ScheduleKind::kConstant, "constant"},
                                                      {models::ScheduleKind::kInverseSqrt, "inverse-sqrt"}};

template <class E, std::size_t N>
const char* name_of(const Named<E> (&table)[N], E value) noexcept {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  return "?";
}

template <class E, std::size_t N>
E parse_named(const Named<E> (&table)[N], std::string_view name, const char* what) {
  for (const auto& e : table) {
    if (name == e.name) return e.value;
  }
  std::string known;
  for (const auto& e : table) known += std::string(known.empty() ? "" : ", ") + e.name;
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(name) + "' (expected one of: " + known + ")");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + raw + "' as a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("config key '" + key + "': value must be finite");
  }
  return value;
}

template <class T>
std::string format_number(T value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + raw + "'");
}

struct Option {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class Access>
Option number(std::string key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<ExperimentConfig&>()))>;
  return Option{key,
                [access](const ExperimentConfig& c) { return format_number(access(const_cast<ExperimentConfig&>(c))); },
                [access, key](ExperimentConfig& c, const std::string& v) { access(c) = parse_number<T>(key, v); }};
}

template <class Access>
Option flag(std::string key, Access access) {
  return Option{key, [access](const ExperimentConfig& c) { return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
                [access, key](ExperimentConfig& c, const std::string& v) { access(c) = parse_bool(key, v); }};
}

template <class Access>
Option text(std::string key, Access access) {
  return Option{key, [access](const ExperimentConfig& c) { return std::string(access(const_cast<ExperimentConfig&>(c))); },
                [access](ExperimentConfig& c, const std::string& v) { access(c) = trim(v); }};
}

template <class E, std::size_t N, class Access>
Option named(std::string key, const Named<E> (&table)[N], Access access) {
  return Option{key, [&table, access](const ExperimentConfig& c) { return std::string(name_of(table, access(const_cast<ExperimentConfig&>(c)))); },
                [&table, access, key](ExperimentConfig& c, const std::string& v) { access(c) = parse_named(table, trim(v), key.c_str()); }};
}

const std::vector<Option>& options() {
  static const std::vector<Option> table = [] {
    using C = ExperimentConfig;
    std::vector<Option> o;
    o.push_back(text("experiment.name", [](C& c) -> std::string& { return c.name; }));
    o.push_back(named("experiment.task", kTasks, [](C& c) -> TaskKind& { return c.task; }));
    o.push_back(Option{"experiment.methods",
                       [](const C& c) {
                         std::vector<std::string> names;
                         for (Method m : c.methods) names.emplace_back(method_name(m));
                         return join_list(names);
                       },
                       [](C& c, const std::string& v) {
                         c.methods.clear();
                         for (const auto& s : split_list(v)) c.methods.push_back(parse_method(s));
                       }});
    o.push_back(Option{"experiment.seeds",
                       [](const C& c) {
                         std::vector<std::string> s;
                         for (auto x : c.seeds) s.push_back(format_number(x));
                         return join_list(s);
                       },
                       [](C& c, const std::string& v) {
                         c.seeds.clear();
                         for (const auto& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>("experiment.seeds", s));
                       }});
    o.push_back(Option{"experiment.output_dir", [](const C& c) { return c.output_dir.string(); },
                       [](C& c, const std::string& v) { c.output_dir = trim(v); }});
    o.push_back(flag("experiment.checkpoints", [](C& c) -> bool& { return c.checkpoints; }));

    o.push_back(Option{"data.train_path", [](const C& c) { return c.data.train_path.string(); },
                       [](C& c, const std::string& v) { c.data.train_path = trim(v); }});
    o.push_back(Option{"data.extra_path", [](const C& c) { return c.data.extra_path.string(); },
                       [](C& c, const std::string& v) { c.data.extra_path = trim(v); }});
    o.push_back(Option{"data.test_path", [](const C& c) { return c.data.test_path.string(); },
                       [](C& c, const std::string& v) { c.data.test_path = trim(v); }});
    o.push_back(number("data.train_size", [](C& c) -> std::size_t& { return c.data.train_size; }));
    o.push_back(number("data.extra_pool", [](C& c) -> std::size_t& { return c.data.extra_pool; }));
    o.push_back(number("data.test_size", [](C& c) -> std::size_t& { return c.data.test_size; }));
    o.push_back(number("data.labels", [](C& c) -> std::size_t& { return c.data.classification.labels; }));
    o.push_back(number("data.per_label", [](C& c) -> std::size_t& { return c.data.classification.per_label; }));
    o.push_back(number("data.vocab_size", [](C& c) -> std::size_t& { return c.data.classification.vocab_size; }));
    o.push_back(number("data.cluster_size", [](C& c) -> std::size_t& { return c.data.classification.cluster_size; }));
    o.push_back(number("data.tokens_per_instance", [](C& c) -> std::size_t& { return c.data.classification.tokens_per_instance; }));
    o.push_back(number("data.noise_ratio", [](C& c) -> double& { return c.data.classification.noise_ratio; }));
    o.push_back(number("data.confusion", [](C& c) -> double& { return c.data.classification.confusion; }));
    o.push_back(number("data.instances", [](C& c) -> std::size_t& { return c.data.translation.instances; }));
    o.push_back(number("data.source_vocab", [](C& c) -> std::size_t& { return c.data.translation.source_vocab; }));
    o.push_back(number("data.min_length", [](C& c) -> std::size_t& { return c.data.translation.min_length; }));
    o.push_back(number("data.max_length", [](C& c) -> std::size_t& { return c.data.translation.max_length; }));
    o.push_back(number("data.zipf_exponent", [](C& c) -> double& { return c.data.translation.zipf_exponent; }));
    o.push_back(flag("data.reorder", [](C& c) -> bool& { return c.data.translation.reorder; }));
    o.push_back(number("data.synonym_ratio", [](C& c) -> double& { return c.data.translation.synonym_ratio; }));

    o.push_back(named("split.mode", kModes, [](C& c) -> ForgetMode& { return c.split.mode; }));
    o.push_back(number("split.count", [](C& c) -> std::size_t& { return c.split.count; }));
    o.push_back(text("split.token", [](C& c) -> std::string& { return c.split.token; }));
    o.push_back(Option{"split.ids", [](const C& c) { return join_list(c.split.ids); },
                       [](C& c, const std::string& v) { c.split.ids = split_list(v); }});
    o.push_back(number("split.band", [](C& c) -> std::size_t& { return c.split.band; }));
    o.push_back(number("split.bands", [](C& c) -> std::size_t& { return c.split.bands; }));
    o.push_back(number("split.extra_count", [](C& c) -> std::size_t& { return c.split.extra_count; }));

    o.push_back(Option{"model.architecture", [](const C& c) { return std::string(models::architecture_name(c.model.architecture)); },
                       [](C& c, const std::string& v) {
                         try {
                           c.model.architecture = models::parse_architecture(trim(v));
                         } catch (const std::invalid_argument& e) {
                           throw ConfigError(std::string("model.architecture: ") + e.what());
                         }
                       }});
    o.push_back(number("model.embedding", [](C& c) -> std::size_t& { return c.model.embedding; }));
    o.push_back(number("model.hidden", [](C& c) -> std::size_t& { return c.model.hidden; }));
    o.push_back(number("model.max_positions", [](C& c) -> std::size_t& { return c.model.max_positions; }));

    o.push_back(number("train.epochs", [](C& c) -> std::size_t& { return c.train.epochs; }));
    o.push_back(number("train.batch_size", [](C& c) -> std::size_t& { return c.train.batch_size; }));
    o.push_back(number("train.max_steps", [](C& c) -> std::size_t& { return c.train.max_steps; }));
    o.push_back(number("train.learning_rate", [](C& c) -> double& { return c.train.adam.learning_rate; }));
    o.push_back(number("train.beta1", [](C& c) -> double& { return c.train.adam.beta1; }));
    o.push_back(number("train.beta2", [](C& c) -> double& { return c.train.adam.beta2; }));
    o.push_back(number("train.epsilon", [](C& c) -> double& { return c.train.adam.epsilon; }));
    o.push_back(named("train.schedule", kSchedules, [](C& c) -> models::ScheduleKind& { return c.train.schedule; }));
    o.push_back(number("train.warmup", [](C& c) -> std::size_t& { return c.train.warmup; }));

    o.push_back(number("helpers.epochs", [](C& c) -> std::size_t& { return c.helpers.train.epochs; }));
    o.push_back(number("helpers.batch_size", [](C& c) -> std::size_t& { return c.helpers.train.batch_size; }));
    o.push_back(number("helpers.learning_rate", [](C& c) -> double& { return c.helpers.train.adam.learning_rate; }));
    o.push_back(named("helpers.schedule", kSchedules, [](C& c) -> models::ScheduleKind& { return c.helpers.train.schedule; }));
    o.push_back(number("helpers.warmup", [](C& c) -> std::size_t& { return c.helpers.train.warmup; }));
    o.push_back(flag("helpers.augment", [](C& c) -> bool& { return c.helpers.augment; }));
    o.push_back(number("helpers.augment_fraction", [](C& c) -> double& { return c.helpers.augment_fraction; }));

    o.push_back(number("unlearn.alpha", [](C& c) -> double& { return c.unlearn.alpha; }));
    o.push_back(number("unlearn.sigma", [](C& c) -> double& { return c.unlearn.sigma; }));
    o.push_back(number("unlearn.learning_rate", [](C& c) -> double& { return c.unlearn.learning_rate; }));
    o.push_back(number("unlearn.batch_size", [](C& c) -> std::size_t& { return c.unlearn.batch_size; }));
    o.push_back(number("unlearn.max_steps", [](C& c) -> std::size_t& { return c.unlearn.max_steps; }));
    o.push_back(number("unlearn.inner_steps", [](C& c) -> std::size_t& { return c.unlearn.inner_steps; }));
    o.push_back(number("unlearn.valid_steps", [](C& c) -> std::size_t& { return c.unlearn.valid_steps; }));

    o.push_back(number("badt.alpha", [](C& c) -> double& { return c.badt.alpha; }));
    o.push_back(number("badt.learning_rate", [](C& c) -> double& { return c.badt.learning_rate; }));
    o.push_back(number("badt.batch_size", [](C& c) -> std::size_t& { return c.badt.batch_size; }));
    o.push_back(number("badt.steps", [](C& c) -> std::size_t& { return c.badt.badt_steps; }));

    o.push_back(number("sisa.shards", [](C& c) -> std::size_t& { return c.sisa_shards; }));

    o.push_back(Option{"eval.metrics", [](const C& c) { return join_list(c.eval.metrics); },
                       [](C& c, const std::string& v) { c.eval.metrics = split_list(v); }});
    o.push_back(number("eval.beam", [](C& c) -> std::size_t& { return c.eval.beam; }));

    o.push_back(flag("mia.enabled", [](C& c) -> bool& { return c.mia.enabled; }));
    o.push_back(number("mia.shadow_fraction", [](C& c) -> double& { return c.mia.shadow_fraction; }));
    o.push_back(number("mia.nonmembers", [](C& c) -> std::size_t& { return c.mia.nonmembers; }));
    o.push_back(number("mia.attacker_steps", [](C& c) -> std::size_t& { return c.mia.attacker.steps; }));
    o.push_back(number("mia.attacker_learning_rate", [](C& c) -> double& { return c.mia.attacker.learning_rate; }));
    return o;
  }();
  return table;
}

const Option& find_option(std::string_view key) {
  for (const auto& o : options()) {
    if (o.key == key) return o;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::set<std::string> kMetrics{"task", "perplexity", "jsd", "lpd", "pdlp"};

}  // namespace

const char* task_name(TaskKind t) noexcept { return name_of(kTasks, t); }
const char* method_name(Method m) noexcept { return name_of(kMethods, m); }
const char* forget_mode_name(ForgetMode m) noexcept { return name_of(kModes, m); }
TaskKind parse_task(std::string_view name) { return parse_named(kTasks, name, "task"); }
Method parse_method(std::string_view name) { return parse_named(kMethods, name, "method"); }
ForgetMode parse_forget_mode(std::string_view name) { return parse_named(kModes, name, "forget mode"); }

bool ExperimentConfig::wants(std::string_view metric) const {
  return std::find(eval.metrics.begin(), eval.metrics.end(), metric) != eval.metrics.end();
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (seeds.empty()) fail("experiment.seeds must list at least one seed");
  if (name.empty()) fail("experiment.name must not be empty");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i] == methods[j]) fail(std::string("experiment.methods lists '") + method_name(methods[i]) + "' twice");
    }
  }
  const bool any_path = !data.train_path.empty() || !data.extra_path.empty() || !data.test_path.empty();
  if (any_path) {
    for (const auto* p : {&data.train_path, &data.extra_path, &data.test_path}) {
      if (p->empty()) fail("data: train_path, extra_path and test_path must be given together");
      if (!std::filesystem::is_regular_file(*p)) fail("data: no such file '" + p->string() + "'");
    }
  } else if (data.train_size == 0 || data.test_size == 0) {
    fail("data: train_size and test_size must be positive");
  }
  if ((task == TaskKind::kClassification) == model.generative()) {
    fail(std::string("model.architecture '") + models::architecture_name(model.architecture) + "' does not fit task '" +
         task_name(task) + "'");
  }
  if (split.mode == ForgetMode::kToken && split.token.empty()) fail("split.token is required in token mode");
  if (split.mode == ForgetMode::kIds && split.ids.empty()) fail("split.ids is required in ids mode");
  if (split.mode == ForgetMode::kBand && (split.bands == 0 || split.band >= split.bands)) {
    fail("split.band must be below split.bands");
  }
  for (const auto& m : eval.metrics) {
    if (!kMetrics.contains(m)) fail("eval.metrics: unknown metric '" + m + "'");
  }
  if (eval.beam == 0) fail("eval.beam must be positive");
  if (sisa_shards < 2) fail("sisa.shards must be at least 2");
  if (mia.enabled && mia.nonmembers == 0) fail("mia.nonmembers must be positive");
  try {
    model.validate();
    train.validate();
    helpers.train.validate();
    unlearn.validate();
    badt.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

void set_option(ExperimentConfig& config, std::string_view key, const std::string& value) {
  find_option(key).set(config, value);
}

std::string get_option(const ExperimentConfig& config, std::string_view key) { return find_option(key).get(config); }

std::vector<std::string> option_keys() {
  std::vector<std::string> out;
  for (const auto& o : options()) out.push_back(o.key);
  return out;
}

ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig config = base;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (body.data().empty()) continue;  // empty section
      throw ConfigError("config key '" + section + "' is outside any section");
    }
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw ConfigError("config section '" + section + "' is nested");
      set_option(config, section + "." + key, value.data());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string to_ini(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& o : options()) {
    const auto dot = o.key.find('.');
    const std::string s = o.key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += o.key.substr(dot + 1) + " = " + o.get(config) + "\n";
  }
  return out;
}

}  // namespace kga::harness
