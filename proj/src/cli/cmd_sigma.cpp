#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/imageops.hpp"
#include "traitlab/png_io.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

}  // namespace

int cmd_sigma(const Options& opt) {
  if (opt.images.empty())
    throw Error(errc::parse_failure, "sigma requires --images");
  if (!fs::is_directory(opt.images))
    throw Error(errc::io_failure, "image directory not found: " + opt.images);

  std::string suffix = ".png";
  if (!opt.sigma_filter.empty())
    suffix = "." + std::string(condition_token(
                       condition_from_token(opt.sigma_filter))) +
             ".png";

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(opt.images)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      files.push_back(entry.path().string());
  }
  if (files.empty())
    throw Error(errc::empty_input, "no matching images in " + opt.images);
  std::sort(files.begin(), files.end());

  std::vector<img::FrameImage> images;
  images.reserve(files.size());
  for (const std::string& file : files) images.push_back(img::read_png(file));

  const img::SimilarityStat stat = img::image_set_sigma(images);
  std::printf("images: %zu\nsigma: %.6g\n", images.size(), stat.sigma);
  return kExitOk;
}

}  // namespace traitlab::cli
