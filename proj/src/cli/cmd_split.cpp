#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/formats.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* flag) {
  if (value.empty())
    throw Error(errc::parse_failure, std::string("split requires ") + flag);
}

}  // namespace

int cmd_split(const Options& opt) {
  require(opt.manifest, "--manifest");
  require(opt.quotas, "--quotas");
  require(opt.out, "--out");
  if (!fs::exists(opt.manifest))
    throw Error(errc::io_failure, "corpus manifest not found: " + opt.manifest);

  const std::vector<corpus::ClipRef> clips =
      formats::read_corpus_manifest(opt.manifest);
  const corpus::SplitQuota quota = parse_quotas(opt.quotas);
  const corpus::SplitManifest manifest = corpus::build_splits(clips, quota);
  const corpus::DisjointVerdict verdict = corpus::verify_disjoint(manifest);

  fs::create_directories(opt.out);
  for (corpus::Split s : corpus::kSplits) {
    corpus::SplitManifest single;
    single.split(s) = manifest.split(s);
    formats::write_split_manifest(
        fs::path(opt.out) / (std::string(corpus::split_name(s)) + ".csv"),
        single);
  }

  for (corpus::Split s : corpus::kSplits) {
    const std::size_t uids = manifest.uid_count(s);
    const std::size_t count = manifest.split(s).size();
    const double ratio = uids ? static_cast<double>(count) / uids : 0.0;
    std::printf("%-11s uids=%-6zu clips=%-7zu vid/UID=%.2f\n",
                corpus::split_name(s), uids, count, ratio);
  }
  std::printf("verdict: %s\n", verdict.pass ? "pass" : "fail");

  int code = verdict.pass ? kExitOk : kExitValidation;
  if (!opt.legacy.empty()) {
    const corpus::SplitManifest legacy = read_splits(opt.legacy);
    const corpus::OverlapReport report =
        corpus::overlap_stats(legacy.training, legacy.testing);
    std::printf("legacy test contamination: %.4g%%\n",
                100.0 * report.test_contaminated_fraction);
    std::printf("legacy train contamination: %.4g%%\n",
                100.0 * report.train_contaminated_fraction);
    if (!report.shared_uids.empty()) {
      std::fprintf(stderr,
                   "legacy split is leaky: %zu uids shared between training "
                   "and testing\n",
                   report.shared_uids.size());
      if (opt.strict) code = kExitValidation;
    }
  }
  return code;
}

}  // namespace traitlab::cli
