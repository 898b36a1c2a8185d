#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/formats.hpp"
#include "traitlab/imageops.hpp"
#include "traitlab/png_io.hpp"
#include "traitlab/report.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* flag) {
  if (value.empty())
    throw Error(errc::parse_failure, std::string("evaluate requires ") + flag);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(errc::io_failure, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(errc::io_failure, "write failed: " + path.string());
}

// Per-condition sigma over whatever images the directory holds for it.
std::vector<report::SigmaEntry> sigma_entries(const fs::path& dir) {
  std::vector<report::SigmaEntry> entries;
  for (Condition condition : kConditions) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto parsed =
          parse_condition_image_name(entry.path().filename().string());
      if (parsed && std::get<2>(*parsed) == condition)
        files.push_back(entry.path().string());
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    std::vector<img::FrameImage> images;
    images.reserve(files.size());
    for (const std::string& file : files) images.push_back(img::read_png(file));
    entries.push_back(
        {condition_label(condition), img::image_set_sigma(images).sigma});
  }
  return entries;
}

}  // namespace

int cmd_evaluate(const Options& opt) {
  if (!(opt.alpha > 0.0) || !(opt.alpha < 1.0) || opt.num_models < 1)
    throw Error(errc::invalid_alpha,
                "alpha must lie in (0,1) and num-models must be positive");
  require(opt.splits, "--splits");
  require(opt.predictions, "--predictions");
  require(opt.truth, "--truth");
  require(opt.out, "--out");

  // The confound guard comes before anything else touches the inputs.
  const corpus::SplitManifest manifest = read_splits(opt.splits);
  const corpus::DisjointVerdict verdict = corpus::verify_disjoint(manifest);
  bool confounded = false;
  if (!verdict.pass) {
    if (opt.strict) {
      std::cerr << "error: splits are leaky (" << verdict.shared_uids.size()
                << " uids shared between splits); pass --allow-leakage to "
                   "evaluate anyway\n";
      return kExitValidation;
    }
    confounded = true;
  }

  if (!fs::is_directory(opt.predictions))
    throw Error(errc::io_failure,
                "prediction directory not found: " + opt.predictions);
  if (!fs::exists(opt.truth))
    throw Error(errc::io_failure, "ground truth not found: " + opt.truth);

  const formats::TraitTable truth = formats::read_trait_table(opt.truth);
  std::array<stats::PredictionTable, 4> tables;
  for (Condition condition : kConditions) {
    const fs::path file =
        fs::path(opt.predictions) /
        (std::string(condition_token(condition)) + ".csv");
    if (!fs::exists(file))
      throw Error(errc::io_failure,
                  "missing prediction table " + file.string());
    tables[static_cast<int>(condition)] =
        formats::join_tables(formats::read_trait_table(file), truth);
  }

  report::Report rep = report::build_report(tables, opt.alpha, opt.num_models);
  rep.split_verdict = {true, verdict.pass, verdict.shared_uids};
  rep.confounded = confounded;
  if (!opt.images.empty()) {
    if (!fs::is_directory(opt.images))
      throw Error(errc::io_failure,
                  "image directory not found: " + opt.images);
    rep.sigmas = sigma_entries(opt.images);
  }

  const std::string text = report::render_text(rep);
  std::fputs(text.c_str(), stdout);
  fs::create_directories(opt.out);
  write_file(fs::path(opt.out) / "report.txt", text);
  write_file(fs::path(opt.out) / "report.json", report::render_json(rep));
  return kExitOk;
}

}  // namespace traitlab::cli
