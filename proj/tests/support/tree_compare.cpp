#include "tree_compare.hpp"

#include <fstream>
#include <iterator>
#include <map>

namespace fs = std::filesystem;

namespace support {

namespace {

std::map<std::string, fs::path> list_files(const fs::path& root) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = e.path();
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string tree_difference(const fs::path& a, const fs::path& b) {
  const auto fa = list_files(a);
  const auto fb = list_files(b);
  for (const auto& [rel, path] : fa) {
    const auto it = fb.find(rel);
    if (it == fb.end()) return "only in first run: " + rel;
    if (slurp(path) != slurp(it->second)) return "contents differ: " + rel;
  }
  for (const auto& [rel, path] : fb) {
    if (!fa.count(rel)) return "only in second run: " + rel;
  }
  if (fa.empty()) return "no files written";
  return {};
}

fs::path fresh_temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace support
