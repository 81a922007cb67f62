#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace flipaudit {

std::string read_text_file(const std::filesystem::path& path);

// Writes every (path, contents) pair to a temporary sibling, then renames all of
// them into place. Nothing is renamed unless every temporary write succeeded.
void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

}  // namespace flipaudit
