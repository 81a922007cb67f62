#include "flipaudit/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "flipaudit/error.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::synth {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::array<double, kNumFindings> default_prevalence() {
  std::array<double, kNumFindings> p{};
  p[index_of(Finding::EnlargedCardiomediastinum)] = 0.10;
  p[index_of(Finding::Cardiomegaly)] = 0.15;
  p[index_of(Finding::LungOpacity)] = 0.20;
  p[index_of(Finding::LungLesion)] = 0.05;
  p[index_of(Finding::Edema)] = 0.12;
  p[index_of(Finding::Consolidation)] = 0.08;
  p[index_of(Finding::Pneumonia)] = 0.05;
  p[index_of(Finding::Atelectasis)] = 0.20;
  p[index_of(Finding::Pneumothorax)] = 0.05;
  p[index_of(Finding::PleuralEffusion)] = 0.20;
  p[index_of(Finding::PleuralOther)] = 0.05;
  p[index_of(Finding::Fracture)] = 0.05;
  p[index_of(Finding::SupportDevices)] = 0.40;
  return p;
}

double draw_probability(const SynthSpec& spec, std::size_t f, double age) {
  return sigmoid(logit(spec.prevalence[f]) + spec.finding_age_slope * (age - spec.age_mean));
}

// Final labels from independent draws: a positive child makes every ancestor
// positive; No Finding is set when nothing but Support Devices is present.
std::array<std::uint8_t, kNumFindings> close_labels(const LabelHierarchy& h,
                                                    const std::array<std::uint8_t, kNumFindings>& draws) {
  std::array<std::uint8_t, kNumFindings> out = draws;
  out[index_of(Finding::NoFinding)] = 0;
  for (std::size_t f = 1; f < kNumFindings; ++f) {
    if (!draws[f]) continue;
    for (Finding a : findings_in(h.ancestors(finding_at(f)))) out[index_of(a)] = 1;
  }
  bool any = false;
  for (std::size_t f = 1; f < kNumFindings; ++f) {
    if (finding_at(f) != Finding::SupportDevices && out[f]) any = true;
  }
  out[index_of(Finding::NoFinding)] = any ? 0 : 1;
  return out;
}

double misclass_logit(const SynthSpec& spec, const TaskRecipe& r, double age, bool lateral,
                      const std::array<std::uint8_t, kNumFindings>& labels) {
  double z = logit(r.base_rate) + r.age_effect * (age - spec.age_mean) +
             r.lateral_effect * ((lateral ? 1.0 : 0.0) - spec.lateral_rate);
  for (const auto& [f, effect] : r.finding_effects) {
    z += effect * (labels[index_of(f)] - spec.prevalence[index_of(f)]);
  }
  return z;
}

double sample_beta(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

bool in_unit(double p) { return p > 0.0 && p < 1.0; }

}  // namespace

SynthSpec SynthSpec::planted() {
  SynthSpec s;
  s.prevalence = default_prevalence();
  for (Task t : kAllTasks) {
    TaskRecipe& r = s.tasks[index_of(t)];
    r.base_rate = 0.15;
    r.age_effect = 0.02;
    r.lateral_effect = -0.6;
  }
  for (Task t : {Task::Atelectasis, Task::PleuralEffusion, Task::Edema}) {
    s.tasks[index_of(t)].finding_effects = {{Finding::SupportDevices, 0.5}};
  }
  return s;
}

SynthSpec SynthSpec::null_effects() {
  SynthSpec s = planted();
  for (auto& r : s.tasks) {
    r.age_effect = 0.0;
    r.lateral_effect = 0.0;
    r.finding_effects.clear();
  }
  return s;
}

void SynthSpec::validate() const {
  if (n_studies < 2) throw InputError("synth: n_studies must be at least 2");
  if (n_models < 1) throw InputError("synth: n_models must be at least 1");
  for (Task t : kAllTasks) {
    const TaskRecipe& r = tasks[index_of(t)];
    if (!in_unit(r.base_rate)) {
      throw InputError(fmt::format("synth: base_rate for {} must be in (0, 1)", task_name(t)));
    }
    if (!std::isfinite(r.age_effect) || !std::isfinite(r.lateral_effect)) {
      throw InputError(fmt::format("synth: non-finite effect for {}", task_name(t)));
    }
    for (const auto& [f, e] : r.finding_effects) {
      if (!std::isfinite(e)) throw InputError(fmt::format("synth: non-finite effect for {}", finding_name(f)));
    }
  }
  for (std::size_t f = 1; f < kNumFindings; ++f) {
    if (!in_unit(prevalence[f])) {
      throw InputError(fmt::format("synth: prevalence of {} must be in (0, 1)", finding_name(finding_at(f))));
    }
  }
  if (!(distance_concentration > 0.0)) throw InputError("synth: distance_concentration must be positive");
  if (!(threshold_min > 0.0 && threshold_min <= threshold_max && threshold_max < 1.0)) {
    throw InputError("synth: need 0 < threshold_min <= threshold_max < 1");
  }
  const double dmax = std::min(threshold_min, 1.0 - threshold_max);
  if (!(dead_zone >= 0.0 && dead_zone < dmax)) {
    throw InputError("synth: dead_zone must be below the smallest threshold margin");
  }
  if (!(age_sd >= 0.0 && age_min >= 0.0 && age_min <= age_max)) throw InputError("synth: invalid age range");
  if (!(male_rate >= 0.0 && male_rate <= 1.0) || !(lateral_rate >= 0.0 && lateral_rate <= 1.0)) {
    throw InputError("synth: male_rate and lateral_rate must be in [0, 1]");
  }
  if (!std::isfinite(finding_age_slope)) throw InputError("synth: finding_age_slope must be finite");
}

SynthResult generate(const SynthSpec& spec, const LabelHierarchy& hierarchy, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = spec.n_studies;
  const int width = std::max<int>(5, static_cast<int>(std::to_string(n).size()));

  std::vector<StudyRecord> studies(n);
  Rng rng = make_rng(seed, "synth-studies");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> age_dist(spec.age_mean, spec.age_sd);
  for (std::size_t i = 0; i < n; ++i) {
    StudyRecord& s = studies[i];
    s.study_id = fmt::format("study_{:0{}d}", i + 1, width);
    s.age = std::clamp(std::round(age_dist(rng)), spec.age_min, spec.age_max);
    s.sex = unit(rng) < spec.male_rate ? 1 : 0;
    s.has_lateral_view = unit(rng) < spec.lateral_rate;
    const double u = unit(rng);
    s.num_ap_views = u < 0.4 ? 0 : (u < 0.9 ? 1 : 2);
    // at least one frontal view, and PA is not a linear function of AP
    s.num_pa_views = s.num_ap_views == 0 ? 1 : (unit(rng) < 0.15 ? 1 : 0);

    std::array<std::uint8_t, kNumFindings> draws{};
    for (std::size_t f = 1; f < kNumFindings; ++f) {
      draws[f] = unit(rng) < draw_probability(spec, f, s.age) ? 1 : 0;
    }
    s.labels = close_labels(hierarchy, draws);
    s.scores.resize(spec.n_models);
  }

  SynthResult result{Dataset({}, {}, hierarchy), {}, {}};
  result.thresholds.resize(spec.n_models);
  result.planted_misclass.resize(spec.n_models);
  const double b = spec.distance_concentration;
  for (std::size_t m = 0; m < spec.n_models; ++m) {
    for (Task t : kAllTasks) {
      const std::size_t ti = index_of(t);
      Rng trng = make_rng(seed, "synth-threshold", {m, ti});
      const double t0 = std::uniform_real_distribution<double>(spec.threshold_min, spec.threshold_max)(trng);
      result.thresholds[m][ti] = t0;
      const double dmax = std::min(t0, 1.0 - t0);

      auto& planted = result.planted_misclass[m][ti];
      planted.resize(n);
      Rng srng = make_rng(seed, "synth-scores", {m, ti});
      for (std::size_t i = 0; i < n; ++i) {
        StudyRecord& s = studies[i];
        const double p = sigmoid(misclass_logit(spec, spec.tasks[ti], s.age, s.has_lateral_view, s.labels));
        const bool wrong = unit(srng) < p;
        const double frac = wrong ? sample_beta(srng, 2.0, b) : unit(srng);
        const bool pred = (s.label(t) == 1) != wrong;
        const double d = spec.dead_zone + (dmax - spec.dead_zone) * frac;
        s.scores[m][ti] = std::clamp(pred ? t0 + d : t0 - d, 0.0, 1.0);
        planted[i] = wrong ? 1 : 0;
      }
    }
  }

  std::vector<std::string> model_ids;
  const int mwidth = std::max<int>(2, static_cast<int>(std::to_string(spec.n_models).size()));
  for (std::size_t m = 0; m < spec.n_models; ++m) model_ids.push_back(fmt::format("model_{:0{}d}", m, mwidth));
  // zero-padded ids are already sorted, so the Dataset keeps this model order
  result.dataset = Dataset(std::move(studies), std::move(model_ids), hierarchy);
  return result;
}

std::string recipe_json(const SynthSpec& spec, const SynthResult& result, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_studies"] = spec.n_studies;
  j["n_models"] = spec.n_models;
  j["distance_concentration"] = spec.distance_concentration;
  j["dead_zone"] = spec.dead_zone;
  j["finding_age_slope"] = spec.finding_age_slope;
  nlohmann::ordered_json prev = nlohmann::ordered_json::object();
  for (std::size_t f = 1; f < kNumFindings; ++f) prev[std::string(finding_name(finding_at(f)))] = spec.prevalence[f];
  j["prevalence"] = prev;
  nlohmann::ordered_json tasks = nlohmann::ordered_json::object();
  for (Task t : kAllTasks) {
    const TaskRecipe& r = spec.tasks[index_of(t)];
    nlohmann::ordered_json tj;
    tj["base_rate"] = r.base_rate;
    tj["age_effect"] = r.age_effect;
    tj["lateral_effect"] = r.lateral_effect;
    nlohmann::ordered_json fe = nlohmann::ordered_json::object();
    for (const auto& [f, e] : r.finding_effects) fe[std::string(finding_name(f))] = e;
    tj["finding_effects"] = fe;
    tasks[std::string(task_name(t))] = tj;
  }
  j["tasks"] = tasks;
  nlohmann::ordered_json thr = nlohmann::ordered_json::object();
  const auto& ids = result.dataset.model_ids();
  for (std::size_t m = 0; m < ids.size(); ++m) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (Task t : kAllTasks) row[std::string(task_name(t))] = result.thresholds[m][index_of(t)];
    thr[ids[m]] = row;
  }
  j["planted_thresholds"] = thr;
  return j.dump(2) + "\n";
}

double misclass_posterior(const SynthSpec& spec, const LabelHierarchy& hierarchy, const StudyRecord& study,
                          Task task, double threshold, double score) {
  const TaskRecipe& r = spec.tasks[index_of(task)];
  const Finding tf = task_finding(task);

  // Draw bits that can change the task label or any finding with an effect.
  FindingSet relevant;
  auto need = [&](Finding f) {
    if (f == Finding::NoFinding) {
      for (std::size_t g = 1; g < kNumFindings; ++g) relevant.set(g);
      return;
    }
    relevant.set(index_of(f));
    relevant |= hierarchy.descendants(f);
  };
  need(tf);
  for (const auto& [f, e] : r.finding_effects) {
    if (e != 0.0) need(f);
  }
  relevant.reset(index_of(Finding::NoFinding));
  const std::vector<Finding> bits = findings_in(relevant);
  if (bits.size() > 16) throw InputError("misclass_posterior: too many findings to marginalize");

  const double dmax = std::min(threshold, 1.0 - threshold);
  const bool pred = score > threshold;
  const double frac = std::clamp((std::abs(score - threshold) - spec.dead_zone) / (dmax - spec.dead_zone), 0.0, 1.0);
  const double b = spec.distance_concentration;
  const double beta_pdf = b * (b + 1.0) * frac * std::pow(1.0 - frac, b - 1.0);

  double wrong = 0.0, right = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << bits.size()); ++mask) {
    std::array<std::uint8_t, kNumFindings> draws{};
    double weight = 1.0;
    for (std::size_t j = 0; j < bits.size(); ++j) {
      const std::size_t f = index_of(bits[j]);
      const double q = draw_probability(spec, f, study.age);
      const bool on = (mask >> j) & 1u;
      draws[f] = on ? 1 : 0;
      weight *= on ? q : 1.0 - q;
    }
    // Findings outside the relevant set never enter the logit or the label,
    // so leaving them at zero is harmless.
    const auto labels = close_labels(hierarchy, draws);
    const double p = sigmoid(misclass_logit(spec, r, study.age, study.has_lateral_view, labels));
    const bool y = labels[index_of(tf)] == 1;
    if (y != pred) {
      wrong += weight * p * beta_pdf;
    } else {
      right += weight * (1.0 - p);
    }
  }
  const double total = wrong + right;
  return total > 0.0 ? wrong / total : 0.0;
}

}  // namespace flipaudit::synth
