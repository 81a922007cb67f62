#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "flipaudit/core/dataset.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            fmt::format("flipaudit_{}_{}_{}", tag, static_cast<long>(::getpid()), counter.fetch_add(1));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline const char* kStudiesHeader =
    "study_id,age,sex,has_lateral_view,num_ap_views,num_pa_views,No Finding,Enlarged Cardiomediastinum,"
    "Cardiomegaly,Lung Opacity,Lung Lesion,Edema,Consolidation,Pneumonia,Atelectasis,Pneumothorax,"
    "Pleural Effusion,Pleural Other,Fracture,Support Devices\n";

// Three studies, one model ("m1"), every task scored.
inline std::string three_studies() {
  return std::string(kStudiesHeader) +
         "s1,54,1,1,1,0,0,0,1,0,0,0,0,0,0,0,1,0,0,1\n"
         "s2,71,0,0,0,1,1,0,0,0,0,0,0,0,0,0,0,0,0,0\n"
         "s3,33,1,1,2,0,0,0,0,1,0,1,0,0,1,0,0,0,0,0\n";
}

inline std::string three_outputs(double first_score = 0.25) {
  std::string out = "study_id,model_id,task,score\n";
  const char* tasks[] = {"Atelectasis", "Cardiomegaly", "Pleural Effusion", "Consolidation", "Edema"};
  int k = 0;
  for (const char* s : {"s1", "s2", "s3"}) {
    for (const char* t : tasks) {
      const double v = k == 0 ? first_score : 0.05 * k;
      out += fmt::format("{},m1,{},{}\n", s, t, v);
      ++k;
    }
  }
  return out;
}

// In-memory dataset with random clinical features, findings and scores.
inline flipaudit::Dataset random_dataset(std::size_t n, std::size_t models, unsigned seed) {
  using namespace flipaudit;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<StudyRecord> studies(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = studies[i];
    s.study_id = fmt::format("r{:04d}", i);
    s.age = std::floor(20 + 70 * u(rng));
    s.sex = u(rng) < 0.5;
    s.has_lateral_view = u(rng) < 0.4;
    s.num_ap_views = u(rng) < 0.5 ? 1 : 0;
    s.num_pa_views = s.num_ap_views ? (u(rng) < 0.2 ? 1 : 0) : 1;
    for (auto& l : s.labels) l = u(rng) < 0.3;
    s.scores.resize(models);
    for (auto& row : s.scores) {
      for (auto& v : row) v = u(rng);
    }
  }
  std::vector<std::string> ids;
  for (std::size_t m = 0; m < models; ++m) ids.push_back(fmt::format("m{}", m));
  return Dataset(std::move(studies), std::move(ids), LabelHierarchy::standard());
}

}  // namespace fixtures
