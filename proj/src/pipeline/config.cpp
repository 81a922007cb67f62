#include "flipaudit/pipeline/config.hpp"

#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "flipaudit/error.hpp"
#include "flipaudit/util/files.hpp"

namespace flipaudit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

fs::path RunConfig::studies_path() const { return studies_csv.value_or(output_dir / "studies.csv"); }
fs::path RunConfig::outputs_path() const { return outputs_csv.value_or(output_dir / "outputs.csv"); }
fs::path RunConfig::hierarchy_path() const { return hierarchy_json.value_or(output_dir / "hierarchy.json"); }

namespace {

// Typed access to one JSON object; anything left unread is an error.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InputError(fmt::format("config: '{}' must be an object", where_));
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw InputError(fmt::format("config: unknown key '{}{}'", prefix(), key));
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::runtime_error("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw std::runtime_error("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
            throw std::runtime_error("expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw std::runtime_error("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::runtime_error("expected a string");
      }
      out = v->get<T>();
    } catch (const std::exception& e) {
      throw InputError(fmt::format("config: '{}{}': {}", prefix(), key, e.what()));
    }
  }

  Section sub(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Section(v ? *v : empty, prefix() + key);
  }

  std::string prefix() const { return where_.empty() ? "" : where_ + "."; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

std::vector<identify::IdentifierKind> parse_kinds(Section& s, const std::string& key,
                                                  std::vector<identify::IdentifierKind> fallback) {
  const json* v = s.find(key);
  if (!v) return fallback;
  if (!v->is_array()) throw InputError(fmt::format("config: '{}{}' must be a list", s.prefix(), key));
  std::vector<identify::IdentifierKind> out;
  for (const auto& item : *v) {
    auto kind = item.is_string() ? identify::parse_kind(item.get<std::string>()) : std::nullopt;
    if (!kind) throw InputError(fmt::format("config: '{}{}': unknown identifier kind {}", s.prefix(), key, item.dump()));
    out.push_back(*kind);
  }
  return out;
}

Finding finding_key(const std::string& name, const std::string& where) {
  auto f = parse_finding(name);
  if (!f) throw InputError(fmt::format("config: '{}': unknown finding '{}'", where, name));
  return *f;
}

void parse_synth(Section s, synth::SynthSpec& spec) {
  s.get("n_studies", spec.n_studies);
  s.get("n_models", spec.n_models);
  s.get("distance_concentration", spec.distance_concentration);
  s.get("dead_zone", spec.dead_zone);
  s.get("threshold_min", spec.threshold_min);
  s.get("threshold_max", spec.threshold_max);
  s.get("age_mean", spec.age_mean);
  s.get("age_sd", spec.age_sd);
  s.get("age_min", spec.age_min);
  s.get("age_max", spec.age_max);
  s.get("male_rate", spec.male_rate);
  s.get("lateral_rate", spec.lateral_rate);
  s.get("finding_age_slope", spec.finding_age_slope);
  {
    Section prev = s.sub("prevalence");
    for (std::size_t f = 1; f < kNumFindings; ++f) {
      prev.get(std::string(finding_name(finding_at(f))), spec.prevalence[f]);
    }
  }
  Section tasks = s.sub("tasks");
  for (Task t : kAllTasks) {
    Section r = tasks.sub(std::string(task_name(t)));
    synth::TaskRecipe& recipe = spec.tasks[index_of(t)];
    r.get("base_rate", recipe.base_rate);
    r.get("age_effect", recipe.age_effect);
    r.get("lateral_effect", recipe.lateral_effect);
    if (const json* fe = r.find("finding_effects")) {
      const std::string where = r.prefix() + "finding_effects";
      if (!fe->is_object()) throw InputError(fmt::format("config: '{}' must be an object", where));
      recipe.finding_effects.clear();
      for (const auto& [name, value] : fe->items()) {
        if (!value.is_number()) throw InputError(fmt::format("config: '{}.{}' must be a number", where, name));
        recipe.finding_effects.emplace_back(finding_key(name, where), value.get<double>());
      }
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("config: {}", e.what()));
  }

  RunConfig c;
  {
    Section s(root, "");
    s.get("seed", c.seed);
    std::string out;
    s.get("output_dir", out);
    c.output_dir = resolve(base_dir, out.empty() ? c.output_dir.string() : out);
    std::size_t threads = 0;
    if (s.find("threads")) {
      s.get("threads", threads);
      c.threads = threads;
    }
    s.get("bootstrap_resamples", c.n_resamples);

    {
      Section d = s.sub("data");
      for (auto [key, slot] : {std::pair{"studies", &c.studies_csv}, std::pair{"outputs", &c.outputs_csv},
                               std::pair{"hierarchy", &c.hierarchy_json}}) {
        std::string p;
        d.get(key, p);
        if (!p.empty()) *slot = resolve(base_dir, p);
      }
    }

    parse_synth(s.sub("synth"), c.synth);

    {
      Section a = s.sub("audit");
      a.get("threshold_fraction", c.audit_threshold_fraction);
      a.get("max_iter", c.glm.max_iter);
      a.get("tol", c.glm.tol);
      a.get("ridge", c.glm.ridge);
      a.get("separation_eta", c.glm.separation_eta);
    }
    {
      Section b = s.sub("backend");
      std::string kind;
      b.get("kind", kind);
      if (kind == "gradient_boosted_trees" || kind.empty()) {
        c.backend.kind = identify::ClassifierBackendSpec::Kind::GradientBoostedTrees;
      } else if (kind == "logistic") {
        c.backend.kind = identify::ClassifierBackendSpec::Kind::Logistic;
      } else {
        throw InputError(fmt::format("config: 'backend.kind': unknown backend '{}'", kind));
      }
      b.get("n_rounds", c.backend.trees.n_rounds);
      b.get("learning_rate", c.backend.trees.learning_rate);
      b.get("max_depth", c.backend.trees.max_depth);
      b.get("min_leaf", c.backend.trees.min_leaf);
      b.get("subsample", c.backend.trees.subsample);
      b.get("ridge", c.backend.ridge);
    }
    {
      Section i = s.sub("identify");
      i.get("n_splits", c.identify_splits.n_splits);
      i.get("train_fraction", c.identify_splits.train_fraction);
      c.identify_kinds = parse_kinds(i, "kinds", c.identify_kinds);
    }
    {
      Section f = s.sub("flip");
      f.get("train_fraction", c.flip.train_fraction);
      f.get("val_fraction", c.flip.val_fraction);
      f.get("k_grid", c.flip.k_grid);
      f.get("n_splits", c.flip_splits);
      c.flip_kinds = parse_kinds(f, "kinds", c.flip_kinds);
    }
  }

  if (c.threads && *c.threads == 0) throw InputError("config: 'threads' must be positive");
  if (!(c.audit_threshold_fraction > 0.0 && c.audit_threshold_fraction <= 1.0)) {
    throw InputError("config: 'audit.threshold_fraction' must be in (0, 1]");
  }
  if (c.glm.max_iter < 1 || !(c.glm.tol > 0.0) || !(c.glm.ridge >= 0.0)) {
    throw InputError("config: 'audit' needs max_iter >= 1, tol > 0, ridge >= 0");
  }
  if (c.identify_splits.n_splits == 0 || !(c.identify_splits.train_fraction > 0.0 &&
                                           c.identify_splits.train_fraction < 1.0)) {
    throw InputError("config: 'identify' needs n_splits >= 1 and train_fraction in (0, 1)");
  }
  if (c.flip_splits == 0 || !(c.flip.train_fraction > 0.0 && c.flip.val_fraction > 0.0 &&
                              c.flip.train_fraction + c.flip.val_fraction < 1.0)) {
    throw InputError("config: 'flip' needs n_splits >= 1 and train + val fractions below 1");
  }
  if (c.identify_kinds.empty() || c.flip_kinds.empty()) throw InputError("config: identifier kind lists must not be empty");
  c.synth.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw InputError(fmt::format("cannot read config '{}': {}", path.string(), e.what()));
  }
  return parse_config(text, fs::absolute(path).parent_path());
}

std::string config_to_json(const RunConfig& c) {
  auto kinds = [](const std::vector<identify::IdentifierKind>& ks) {
    ordered_json a = ordered_json::array();
    for (auto k : ks) a.push_back(std::string(identify::kind_name(k)));
    return a;
  };
  ordered_json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["threads"] = c.threads ? ordered_json(*c.threads) : ordered_json(nullptr);
  j["bootstrap_resamples"] = c.n_resamples;
  ordered_json data = ordered_json::object();
  data["studies"] = c.studies_csv ? ordered_json(c.studies_csv->string()) : ordered_json(nullptr);
  data["outputs"] = c.outputs_csv ? ordered_json(c.outputs_csv->string()) : ordered_json(nullptr);
  data["hierarchy"] = c.hierarchy_json ? ordered_json(c.hierarchy_json->string()) : ordered_json(nullptr);
  j["data"] = data;

  const auto& s = c.synth;
  ordered_json sj;
  sj["n_studies"] = s.n_studies;
  sj["n_models"] = s.n_models;
  sj["distance_concentration"] = s.distance_concentration;
  sj["dead_zone"] = s.dead_zone;
  sj["threshold_min"] = s.threshold_min;
  sj["threshold_max"] = s.threshold_max;
  sj["age_mean"] = s.age_mean;
  sj["age_sd"] = s.age_sd;
  sj["age_min"] = s.age_min;
  sj["age_max"] = s.age_max;
  sj["male_rate"] = s.male_rate;
  sj["lateral_rate"] = s.lateral_rate;
  sj["finding_age_slope"] = s.finding_age_slope;
  ordered_json prev = ordered_json::object();
  for (std::size_t f = 1; f < kNumFindings; ++f) prev[std::string(finding_name(finding_at(f)))] = s.prevalence[f];
  sj["prevalence"] = prev;
  ordered_json tasks = ordered_json::object();
  for (Task t : kAllTasks) {
    const auto& r = s.tasks[index_of(t)];
    ordered_json fe = ordered_json::object();
    for (const auto& [f, e] : r.finding_effects) fe[std::string(finding_name(f))] = e;
    tasks[std::string(task_name(t))] = {{"base_rate", r.base_rate},
                                        {"age_effect", r.age_effect},
                                        {"lateral_effect", r.lateral_effect},
                                        {"finding_effects", fe}};
  }
  sj["tasks"] = tasks;
  j["synth"] = sj;

  j["audit"] = {{"threshold_fraction", c.audit_threshold_fraction},
                {"max_iter", c.glm.max_iter},
                {"tol", c.glm.tol},
                {"ridge", c.glm.ridge},
                {"separation_eta", c.glm.separation_eta}};
  j["backend"] = {
      {"kind", c.backend.kind == identify::ClassifierBackendSpec::Kind::Logistic ? "logistic" : "gradient_boosted_trees"},
      {"n_rounds", c.backend.trees.n_rounds},
      {"learning_rate", c.backend.trees.learning_rate},
      {"max_depth", c.backend.trees.max_depth},
      {"min_leaf", c.backend.trees.min_leaf},
      {"subsample", c.backend.trees.subsample},
      {"ridge", c.backend.ridge}};
  j["identify"] = {{"n_splits", c.identify_splits.n_splits},
                   {"train_fraction", c.identify_splits.train_fraction},
                   {"kinds", kinds(c.identify_kinds)}};
  j["flip"] = {{"train_fraction", c.flip.train_fraction},
               {"val_fraction", c.flip.val_fraction},
               {"k_grid", c.flip.k_grid},
               {"n_splits", c.flip_splits},
               {"kinds", kinds(c.flip_kinds)}};
  return j.dump(2) + "\n";
}

}  // namespace flipaudit::pipeline
