#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rnmf_cli.hpp"

namespace rnmf::cli::testing {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh directory under the system temp dir, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;

  explicit ScratchDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("rnmf_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string str(const std::string& name) const { return (path / name).string(); }
};

// name -> bytes for every regular file in `dir` except the manifest.
inline std::map<std::string, std::string> dir_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name == "manifest.txt") continue;
    files[name] = read_text_file(e.path().string());
  }
  return files;
}

inline bool same_outputs(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto fa = dir_files(a);
  return !fa.empty() && fa == dir_files(b);
}

// Smooth synthetic grayscale image (low patch rank).
inline GrayImage smooth_image(std::size_t w, std::size_t h) {
  DenseMatrix v(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      v(y, x) = 120 + 50 * std::sin(0.15 * static_cast<double>(x)) +
                40 * std::cos(0.11 * static_cast<double>(y));
  return image_from_matrix(v);
}

}  // namespace rnmf::cli::testing
