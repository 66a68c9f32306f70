#include "kga/harness/report.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "json.hpp"
#include "kga/harness/config.hpp"
#include "kga/util/atomic_file.hpp"

namespace kga::harness {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json to_json(const unlearn::KGAReport& r) {
  json trajectory = json::array();
  for (const auto& p : r.trajectory) trajectory.push_back({p.step, p.gap});
  return json{{"extra_gap", r.extra_gap},
              {"forget_gap", r.forget_gap},
              {"initial_gap", r.initial_gap},
              {"final_gap", r.final_gap},
              {"steps", r.steps},
              {"best_step", r.best_step},
              {"termination", unlearn::termination_name(r.termination)},
              {"gap_trajectory", trajectory},
              {"loss_trajectory", r.loss_trajectory}};
}

unlearn::KGAReport kga_from_json(const json& j) {
  unlearn::KGAReport r;
  r.extra_gap = j.at("extra_gap").get<double>();
  r.forget_gap = j.at("forget_gap").get<double>();
  r.initial_gap = j.at("initial_gap").get<double>();
  r.final_gap = j.at("final_gap").get<double>();
  r.steps = j.at("steps").get<std::size_t>();
  r.best_step = j.at("best_step").get<std::size_t>();
  const auto term = j.at("termination").get<std::string>();
  r.termination = term == unlearn::termination_name(unlearn::Termination::kGapMet) ? unlearn::Termination::kGapMet
                                                                                   : unlearn::Termination::kStepCap;
  for (const auto& p : j.at("gap_trajectory")) r.trajectory.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
  r.loss_trajectory = j.at("loss_trajectory").get<std::vector<double>>();
  return r;
}

json to_json(const MetricsReport& m) {
  json splits = json::array();
  for (const auto& s : m.splits) {
    splits.push_back(json{{"split", s.split},
                          {"instances", s.instances},
                          {"task", optional_number(s.task)},
                          {"perplexity", optional_number(s.perplexity)},
                          {"jsd", optional_number(s.jsd)},
                          {"lpd", optional_number(s.lpd)},
                          {"pdlp", optional_number(s.pdlp)}});
  }
  json out{{"model", m.model}, {"splits", splits}};
  out["attack"] = m.attack ? json{{"f1", m.attack->f1},
                                  {"false_negative_rate", m.attack->false_negative_rate},
                                  {"accuracy", m.attack->accuracy}}
                           : json(nullptr);
  out["token_count"] = m.token_count ? json(*m.token_count) : json(nullptr);
  return out;
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport m;
  m.model = j.at("model").get<std::string>();
  for (const auto& s : j.at("splits")) {
    SplitMetrics sm;
    sm.split = s.at("split").get<std::string>();
    sm.instances = s.at("instances").get<std::size_t>();
    sm.task = read_optional(s, "task");
    sm.perplexity = read_optional(s, "perplexity");
    sm.jsd = read_optional(s, "jsd");
    sm.lpd = read_optional(s, "lpd");
    sm.pdlp = read_optional(s, "pdlp");
    m.splits.push_back(std::move(sm));
  }
  if (const auto it = j.find("attack"); it != j.end() && !it->is_null()) {
    m.attack = eval::AttackResult{it->at("f1").get<double>(), it->at("false_negative_rate").get<double>(),
                                  it->at("accuracy").get<double>()};
  }
  if (const auto it = j.find("token_count"); it != j.end() && !it->is_null()) m.token_count = it->get<std::size_t>();
  return m;
}

}  // namespace

const SplitMetrics* MetricsReport::split(std::string_view name) const {
  for (const auto& s : splits) {
    if (s.split == name) return &s;
  }
  return nullptr;
}

const MetricsReport* SeedReport::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.model == name) return &m;
  }
  return nullptr;
}

std::string to_json(const ReportBundle& bundle) {
  json seeds = json::array();
  for (const auto& s : bundle.seeds) {
    json models = json::array();
    for (const auto& m : s.models) models.push_back(to_json(m));
    seeds.push_back(json{{"seed", s.seed},
                         {"ok", s.ok},
                         {"error", s.error},
                         {"forget_size", s.forget_size},
                         {"retain_size", s.retain_size},
                         {"extra_size", s.extra_size},
                         {"probe_prompts", s.probe_prompts},
                         {"models", models},
                         {"kga", s.kga ? to_json(*s.kga) : json(nullptr)}});
  }
  const json out{{"name", bundle.name}, {"task_metric", bundle.task_metric}, {"config", bundle.config}, {"seeds", seeds}};
  return out.dump(2) + "\n";
}

std::string timings_json(const ReportBundle& bundle) {
  json rows = json::array();
  for (const auto& s : bundle.seeds) {
    for (const auto& m : s.models) {
      rows.push_back(json{{"seed", s.seed}, {"model", m.model}, {"seconds", m.seconds}, {"helper_seconds", m.helper_seconds}});
    }
  }
  return json{{"name", bundle.name}, {"timings", rows}}.dump(2) + "\n";
}

ReportBundle bundle_from_json(const std::string& report, const std::string& timings) {
  ReportBundle b;
  try {
    const json j = json::parse(report);
    b.name = j.at("name").get<std::string>();
    b.task_metric = j.at("task_metric").get<std::string>();
    b.config = j.at("config").get<std::string>();
    for (const auto& s : j.at("seeds")) {
      SeedReport r;
      r.seed = s.at("seed").get<std::uint64_t>();
      r.ok = s.at("ok").get<bool>();
      r.error = s.at("error").get<std::string>();
      r.forget_size = s.at("forget_size").get<std::size_t>();
      r.retain_size = s.at("retain_size").get<std::size_t>();
      r.extra_size = s.at("extra_size").get<std::size_t>();
      r.probe_prompts = s.at("probe_prompts").get<std::size_t>();
      for (const auto& m : s.at("models")) r.models.push_back(metrics_from_json(m));
      if (!s.at("kga").is_null()) r.kga = kga_from_json(s.at("kga"));
      b.seeds.push_back(std::move(r));
    }
    if (!timings.empty()) {
      const json parsed = json::parse(timings);
      for (const auto& t : parsed.at("timings")) {
        const auto seed = t.at("seed").get<std::uint64_t>();
        const auto model = t.at("model").get<std::string>();
        for (auto& s : b.seeds) {
          if (s.seed != seed) continue;
          for (auto& m : s.models) {
            if (m.model != model) continue;
            m.seconds = t.at("seconds").get<double>();
            m.helper_seconds = t.at("helper_seconds").get<double>();
            if (s.kga && model == method_name(Method::kKga)) {
              s.kga->helper_seconds = m.helper_seconds;
              s.kga->unlearn_seconds = m.seconds - m.helper_seconds;
            }
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
  return b;
}

std::string to_csv(const ReportBundle& bundle) {
  std::string out = "seed,model,split,instances,task,perplexity,jsd,lpd,pdlp\n";
  for (const auto& s : bundle.seeds) {
    for (const auto& m : s.models) {
      for (const auto& sp : m.splits) {
        out += std::to_string(s.seed) + "," + m.model + "," + sp.split + "," + std::to_string(sp.instances) + "," +
               num(sp.task) + "," + num(sp.perplexity) + "," + num(sp.jsd) + "," + num(sp.lpd) + "," + num(sp.pdlp) + "\n";
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> plot_files(const ReportBundle& bundle) {
  std::string time = "seed,model,seconds,helper_seconds\n";
  std::string pdlp = "seed,model,split,pdlp\n";
  std::string gap = "seed,step,gap\n";
  for (const auto& s : bundle.seeds) {
    for (const auto& m : s.models) {
      time += std::to_string(s.seed) + "," + m.model + "," + num(m.seconds) + "," + num(m.helper_seconds) + "\n";
      for (const auto& sp : m.splits) {
        if (sp.pdlp) pdlp += std::to_string(s.seed) + "," + m.model + "," + sp.split + "," + num(sp.pdlp) + "\n";
      }
    }
    if (s.kga) {
      for (const auto& p : s.kga->trajectory) gap += std::to_string(s.seed) + "," + std::to_string(p.step) + "," + num(p.gap) + "\n";
    }
  }
  return {{"plot_time.csv", time}, {"plot_pdlp.csv", pdlp}, {"plot_gap.csv", gap}};
}

std::string sweep_csv(std::span<const ReportBundle> bundles) {
  std::string out = "x,model,seeds,forget_task,test_task,forget_jsd,forget_pdlp,test_pdlp\n";
  for (const auto& b : bundles) {
    std::vector<std::string> order;
    struct Acc {
      std::size_t n = 0;
      double sums[5] = {0, 0, 0, 0, 0};
      std::size_t counts[5] = {0, 0, 0, 0, 0};
    };
    std::map<std::string, Acc> acc;
    for (const auto& s : b.seeds) {
      if (!s.ok) continue;
      for (const auto& m : s.models) {
        if (!acc.contains(m.model)) order.push_back(m.model);
        Acc& a = acc[m.model];
        ++a.n;
        const SplitMetrics* f = m.split("forget");
        const SplitMetrics* t = m.split("test");
        const std::optional<double> values[5] = {f ? f->task : std::nullopt, t ? t->task : std::nullopt,
                                                 f ? f->jsd : std::nullopt, f ? f->pdlp : std::nullopt,
                                                 t ? t->pdlp : std::nullopt};
        for (int k = 0; k < 5; ++k) {
          if (values[k]) {
            a.sums[k] += *values[k];
            ++a.counts[k];
          }
        }
      }
    }
    for (const auto& model : order) {
      const Acc& a = acc[model];
      out += b.name + "," + model + "," + std::to_string(a.n);
      for (int k = 0; k < 5; ++k) out += "," + (a.counts[k] ? num(a.sums[k] / static_cast<double>(a.counts[k])) : std::string());
      out += "\n";
    }
  }
  return out;
}

const char* format_name(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kPlot: return "plot";
  }
  return "?";
}

ReportFormat parse_format(std::string_view name) {
  for (ReportFormat f : {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kPlot}) {
    if (name == format_name(f)) return f;
  }
  throw ConfigError("unknown format '" + std::string(name) + "' (expected json, csv or plot)");
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                               std::span<const ReportFormat> formats) {
  std::vector<std::pair<std::string, std::string>> files;
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::kJson:
        files.emplace_back("report.json", to_json(bundle));
        files.emplace_back("timings.json", timings_json(bundle));
        break;
      case ReportFormat::kCsv:
        files.emplace_back("metrics.csv", to_csv(bundle));
        break;
      case ReportFormat::kPlot:
        for (auto& p : plot_files(bundle)) files.push_back(std::move(p));
        break;
    }
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [name, contents] : files) {
    util::write_file_atomic(dir / name, contents);
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace kga::harness
