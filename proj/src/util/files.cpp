#include "flipaudit/util/files.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flipaudit/error.hpp"

namespace flipaudit {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_files_atomically(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> temps;
  temps.reserve(files.size());
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };

  for (const auto& [path, contents] : files) {
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      if (ec) {
        cleanup();
        throw InputError(fmt::format("cannot create directory '{}': {}",
                                     path.parent_path().string(), ec.message()));
      }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.close();
    if (!out) {
      cleanup();
      throw InputError(fmt::format("cannot write '{}'", path.string()));
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(temps[i], files[i].first);
  }
}

}  // namespace flipaudit
