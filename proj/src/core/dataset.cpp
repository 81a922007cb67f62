#include "flipaudit/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "flipaudit/error.hpp"
#include "flipaudit/util/csv.hpp"
#include "flipaudit/util/files.hpp"

namespace flipaudit {

namespace fs = std::filesystem;

Dataset::Dataset(std::vector<StudyRecord> studies, std::vector<std::string> model_ids,
                 LabelHierarchy hierarchy)
    : studies_(std::move(studies)),
      model_ids_(std::move(model_ids)),
      hierarchy_(std::move(hierarchy)) {
  if (!std::is_sorted(model_ids_.begin(), model_ids_.end())) {
    // Reorder score columns to the sorted model order.
    std::vector<std::size_t> order(model_ids_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return model_ids_[a] < model_ids_[b]; });
    std::vector<std::string> sorted_ids;
    for (auto i : order) sorted_ids.push_back(model_ids_[i]);
    for (auto& s : studies_) {
      if (s.scores.size() != order.size()) break;  // caught by validate_study below
      std::vector<std::array<double, kNumTasks>> sorted_scores;
      for (auto i : order) sorted_scores.push_back(s.scores[i]);
      s.scores = std::move(sorted_scores);
    }
    model_ids_ = std::move(sorted_ids);
  }
  for (std::size_t i = 1; i < model_ids_.size(); ++i) {
    if (model_ids_[i] == model_ids_[i - 1]) {
      throw InputError(fmt::format("duplicate model id '{}'", model_ids_[i]));
    }
  }
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < studies_.size(); ++i) {
    validate_study(studies_[i], model_ids_.size());
    auto [it, inserted] = seen.emplace(studies_[i].study_id, i);
    if (!inserted) {
      throw InputError(fmt::format("duplicate study_id '{}'", studies_[i].study_id));
    }
  }
}

std::optional<std::size_t> Dataset::model_index(const std::string& model_id) const {
  auto it = std::lower_bound(model_ids_.begin(), model_ids_.end(), model_id);
  if (it == model_ids_.end() || *it != model_id) return std::nullopt;
  return static_cast<std::size_t>(it - model_ids_.begin());
}

std::vector<double> Dataset::scores(std::size_t model, Task task) const {
  std::vector<double> out;
  out.reserve(studies_.size());
  for (const auto& s : studies_) out.push_back(s.score(model, task));
  return out;
}

std::vector<int> Dataset::labels(Task task) const {
  std::vector<int> out;
  out.reserve(studies_.size());
  for (const auto& s : studies_) out.push_back(s.label(task));
  return out;
}

void validate_study(const StudyRecord& s, std::size_t num_models) {
  auto fail = [&](const std::string& why) {
    throw InputError(fmt::format("study '{}': {}", s.study_id, why));
  };
  if (s.study_id.empty()) throw InputError("study with empty study_id");
  if (!std::isfinite(s.age) || s.age < 0) fail("age must be a non-negative number");
  if (s.sex != 0 && s.sex != 1) fail("sex must be 0 or 1");
  if (s.num_ap_views < 0 || s.num_pa_views < 0) fail("view counts must be non-negative");
  if (!s.has_lateral_view && s.num_ap_views + s.num_pa_views == 0) fail("study has no views");
  for (auto v : s.labels) {
    if (v > 1) fail("finding labels must be 0 or 1");
  }
  if (s.scores.size() != num_models) {
    fail(fmt::format("expected scores for {} models, found {}", num_models, s.scores.size()));
  }
  for (const auto& row : s.scores) {
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) fail(fmt::format("score {} outside [0, 1]", v));
    }
  }
}

LabelHierarchy parse_hierarchy(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("hierarchy: invalid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_array()) {
    throw InputError("hierarchy: expected an object with an \"edges\" array");
  }
  std::vector<LabelHierarchy::Edge> edges;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
      throw InputError("hierarchy: each edge must be a [parent, child] pair of names");
    }
    auto parent = parse_finding(e[0].get<std::string>());
    auto child = parse_finding(e[1].get<std::string>());
    if (!parent) throw InputError(fmt::format("hierarchy: unknown finding '{}'", e[0].get<std::string>()));
    if (!child) throw InputError(fmt::format("hierarchy: unknown finding '{}'", e[1].get<std::string>()));
    edges.emplace_back(*parent, *child);
  }
  return LabelHierarchy(std::move(edges));
}

LabelHierarchy load_hierarchy(const fs::path& hierarchy_json) {
  return parse_hierarchy(read_text_file(hierarchy_json));
}

std::string hierarchy_to_json(const LabelHierarchy& hierarchy) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : hierarchy.edges()) {
    edges.push_back({std::string(finding_name(p)), std::string(finding_name(c))});
  }
  nlohmann::json doc;
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

Dataset load_dataset(const fs::path& studies_csv, const fs::path& outputs_csv,
                     const fs::path& hierarchy_json) {
  return load_dataset(studies_csv, outputs_csv, load_hierarchy(hierarchy_json));
}

Dataset load_dataset(const fs::path& studies_csv, const fs::path& outputs_csv,
                     LabelHierarchy hierarchy) {
  const std::string sname = studies_csv.string();
  const std::string oname = outputs_csv.string();

  csv::Table st = csv::read_file(studies_csv);
  const std::size_t c_id = st.column("study_id", sname);
  const std::size_t c_age = st.column("age", sname);
  const std::size_t c_sex = st.column("sex", sname);
  const std::size_t c_lat = st.column("has_lateral_view", sname);
  const std::size_t c_ap = st.column("num_ap_views", sname);
  const std::size_t c_pa = st.column("num_pa_views", sname);
  std::array<std::size_t, kNumFindings> c_find{};
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    c_find[f] = st.column(finding_name(finding_at(f)), sname);
  }

  auto binary = [&](std::string_view text, std::string_view what, std::size_t line) {
    long v = csv::parse_int(text, what, line);
    if (v != 0 && v != 1) {
      throw InputError(fmt::format("{}: line {}: {} must be 0 or 1, found '{}'", sname, line, what, text));
    }
    return static_cast<int>(v);
  };

  std::vector<StudyRecord> studies;
  studies.reserve(st.rows.size());
  std::unordered_map<std::string, std::size_t> by_id;
  for (const auto& row : st.rows) {
    try {
      const auto& f = row.fields;
      StudyRecord s;
      s.study_id = f[c_id];
      if (s.study_id.empty()) throw InputError(fmt::format("line {}: empty study_id", row.line));
      s.age = csv::parse_double(f[c_age], "age", row.line);
      if (!std::isfinite(s.age) || s.age < 0) {
        throw InputError(fmt::format("line {}: age must be non-negative, found '{}'", row.line, f[c_age]));
      }
      s.sex = binary(f[c_sex], "sex", row.line);
      s.has_lateral_view = binary(f[c_lat], "has_lateral_view", row.line) == 1;
      s.num_ap_views = static_cast<int>(csv::parse_int(f[c_ap], "num_ap_views", row.line));
      s.num_pa_views = static_cast<int>(csv::parse_int(f[c_pa], "num_pa_views", row.line));
      if (s.num_ap_views < 0 || s.num_pa_views < 0) {
        throw InputError(fmt::format("line {}: view counts must be non-negative", row.line));
      }
      if (!s.has_lateral_view && s.num_ap_views + s.num_pa_views == 0) {
        throw InputError(fmt::format("line {}: study has no views", row.line));
      }
      for (std::size_t k = 0; k < kNumFindings; ++k) {
        s.labels[k] = static_cast<std::uint8_t>(binary(f[c_find[k]], finding_name(finding_at(k)), row.line));
      }
      if (!by_id.emplace(s.study_id, studies.size()).second) {
        throw InputError(fmt::format("line {}: duplicate study_id '{}'", row.line, s.study_id));
      }
      studies.push_back(std::move(s));
    } catch (const InputError& e) {
      const std::string msg = e.what();
      if (msg.rfind(sname, 0) == 0) throw;
      throw InputError(fmt::format("{}: {}", sname, msg));
    }
  }

  csv::Table ot = csv::read_file(outputs_csv);
  const std::size_t o_id = ot.column("study_id", oname);
  const std::size_t o_model = ot.column("model_id", oname);
  const std::size_t o_task = ot.column("task", oname);
  const std::size_t o_score = ot.column("score", oname);

  std::map<std::string, std::size_t> model_slot;  // sorted by id
  for (const auto& row : ot.rows) model_slot.emplace(row.fields[o_model], 0);
  std::vector<std::string> model_ids;
  for (auto& [id, slot] : model_slot) {
    if (id.empty()) throw InputError(fmt::format("{}: empty model_id", oname));
    slot = model_ids.size();
    model_ids.push_back(id);
  }

  const std::size_t cells_per_study = model_ids.size() * kNumTasks;
  std::vector<std::vector<char>> filled(studies.size(), std::vector<char>(cells_per_study, 0));
  for (auto& s : studies) s.scores.assign(model_ids.size(), {});

  for (const auto& row : ot.rows) {
    const auto& f = row.fields;
    auto it = by_id.find(f[o_id]);
    if (it == by_id.end()) {
      throw InputError(fmt::format("{}: line {}: unknown study_id '{}'", oname, row.line, f[o_id]));
    }
    auto task = parse_task(f[o_task]);
    if (!task) {
      throw InputError(fmt::format("{}: line {}: unknown task '{}'", oname, row.line, f[o_task]));
    }
    double score;
    try {
      score = csv::parse_double(f[o_score], "score", row.line);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", oname, e.what()));
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw InputError(fmt::format("{}: line {}: score {} outside [0, 1]", oname, row.line, f[o_score]));
    }
    const std::size_t m = model_slot.at(f[o_model]);
    const std::size_t cell = m * kNumTasks + index_of(*task);
    if (filled[it->second][cell]) {
      throw InputError(fmt::format("{}: line {}: duplicate score for ({}, {}, {})", oname, row.line,
                                   f[o_id], f[o_model], f[o_task]));
    }
    filled[it->second][cell] = 1;
    studies[it->second].scores[m][index_of(*task)] = score;
  }

  for (std::size_t i = 0; i < studies.size(); ++i) {
    for (std::size_t cell = 0; cell < cells_per_study; ++cell) {
      if (!filled[i][cell]) {
        throw InputError(fmt::format("{}: missing score for study '{}', model '{}', task '{}'", oname,
                                     studies[i].study_id, model_ids[cell / kNumTasks],
                                     task_name(kAllTasks[cell % kNumTasks])));
      }
    }
  }

  return Dataset(std::move(studies), std::move(model_ids), std::move(hierarchy));
}

std::pair<std::string, std::string> format_dataset(const Dataset& dataset) {
  std::string studies;
  std::vector<std::string> header = {"study_id", "age", "sex", "has_lateral_view", "num_ap_views",
                                     "num_pa_views"};
  for (std::size_t f = 0; f < kNumFindings; ++f) header.emplace_back(finding_name(finding_at(f)));
  studies += csv::join(header) + "\n";
  for (const auto& s : dataset.studies()) {
    std::vector<std::string> row = {s.study_id, csv::format_double(s.age, 12), std::to_string(s.sex),
                                    s.has_lateral_view ? "1" : "0", std::to_string(s.num_ap_views),
                                    std::to_string(s.num_pa_views)};
    for (auto v : s.labels) row.push_back(v ? "1" : "0");
    studies += csv::join(row) + "\n";
  }

  std::string outputs = "study_id,model_id,task,score\n";
  for (const auto& s : dataset.studies()) {
    for (std::size_t m = 0; m < dataset.num_models(); ++m) {
      for (Task t : kAllTasks) {
        outputs += csv::join({s.study_id, dataset.model_ids()[m], std::string(task_name(t)),
                              csv::format_double(s.score(m, t), 12)});
        outputs += "\n";
      }
    }
  }
  return {std::move(studies), std::move(outputs)};
}

void write_dataset(const Dataset& dataset, const fs::path& studies_csv, const fs::path& outputs_csv) {
  auto [studies, outputs] = format_dataset(dataset);
  write_files_atomically({{studies_csv, std::move(studies)}, {outputs_csv, std::move(outputs)}});
}

}  // namespace flipaudit
