#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "traitlab/trainkit.hpp"

namespace traitlab::train {

namespace {

constexpr const char* kMagic = "traitlab-checkpoint v1";

// %a prints an exact hexadecimal representation, so parameters survive a
// save/load round trip bit for bit and equal runs produce equal files.
std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(errc::parse_failure,
                "checkpoint: bad numeric token '" + token + "'");
  return v;
}

void append_row(std::string& out, const double* row, int n) {
  for (int i = 0; i < n; ++i) {
    out += i ? " " : "";
    out += hex_double(row[i]);
  }
  out += "\n";
}

std::string expect_keyword(std::istream& in, const std::string& keyword) {
  std::string token;
  if (!(in >> token) || token != keyword)
    throw Error(errc::parse_failure,
                "checkpoint: expected '" + keyword + "', got '" + token + "'");
  return token;
}

void read_doubles(std::istream& in, double* out, int n) {
  std::string token;
  for (int i = 0; i < n; ++i) {
    if (!(in >> token))
      throw Error(errc::parse_failure, "checkpoint: parameter block cut short");
    out[i] = parse_double(token);
  }
}

Regressor parse_regressor_params(std::istream& in) {
  Regressor model;
  expect_keyword(in, "weights");
  std::string count;
  in >> count;
  if (count != std::to_string(model.weights.size()))
    throw Error(errc::parse_failure, "checkpoint: unexpected weight count");
  read_doubles(in, model.weights.data(), static_cast<int>(model.weights.size()));
  expect_keyword(in, "bias");
  read_doubles(in, model.bias.data(), static_cast<int>(model.bias.size()));
  return model;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(errc::io_failure, "cannot open for writing: " + path);
  out << body;
  if (!out) throw Error(errc::io_failure, "short write: " + path);
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(errc::io_failure, "cannot open for reading: " + path);
  return in;
}

void expect_header(std::istream& in, const std::string& kind) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw Error(errc::parse_failure, "not a checkpoint file");
  expect_keyword(in, "kind");
  std::string actual;
  in >> actual;
  if (actual != kind)
    throw Error(errc::parse_failure,
                "checkpoint kind '" + actual + "', wanted '" + kind + "'");
}

}  // namespace

std::string serialize_regressor_params(const Regressor& model) {
  std::string out;
  out += "weights " + std::to_string(model.weights.size()) + "\n";
  for (int f = 0; f < kFeatureDim; ++f)
    append_row(out, model.weights.data() + f * stats::kTraitCount,
               stats::kTraitCount);
  out += "bias\n";
  append_row(out, model.bias.data(), stats::kTraitCount);
  return out;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string body;
  body += std::string(kMagic) + "\n";
  body += "kind regressor\n";
  body += "epoch " + std::to_string(ckpt.epoch) + "\n";
  body += "val_loss " + hex_double(ckpt.val_loss) + "\n";
  body += serialize_regressor_params(ckpt.params);
  write_file(path, body);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_file(path);
  expect_header(in, "regressor");
  Checkpoint ckpt;
  expect_keyword(in, "epoch");
  if (!(in >> ckpt.epoch))
    throw Error(errc::parse_failure, "checkpoint: bad epoch");
  expect_keyword(in, "val_loss");
  std::string token;
  in >> token;
  ckpt.val_loss = parse_double(token);
  ckpt.params = parse_regressor_params(in);
  return ckpt;
}

void save_fusion_checkpoint(const std::string& path,
                            const FusionCheckpoint& ckpt) {
  std::string body;
  body += std::string(kMagic) + "\n";
  body += "kind fusion\n";
  body += "epoch " + std::to_string(ckpt.epoch) + "\n";
  body += "val_loss " + hex_double(ckpt.val_loss) + "\n";
  body += "fusion_weights " +
          std::to_string(ckpt.params.fusion_weights.size()) + "\n";
  for (int j = 0; j < kFusionInputDim; ++j)
    append_row(body,
               ckpt.params.fusion_weights.data() + j * stats::kTraitCount,
               stats::kTraitCount);
  body += "fusion_bias\n";
  append_row(body, ckpt.params.fusion_bias.data(), stats::kTraitCount);
  // Branch sections reuse the plain-checkpoint parameter block, so a frozen
  // branch is byte-identical to the file it was loaded from.
  body += "branch face\n";
  body += serialize_regressor_params(ckpt.params.face_branch);
  body += "branch bg\n";
  body += serialize_regressor_params(ckpt.params.bg_branch);
  write_file(path, body);
}

FusionCheckpoint load_fusion_checkpoint(const std::string& path) {
  std::ifstream in = open_file(path);
  expect_header(in, "fusion");
  FusionCheckpoint ckpt;
  expect_keyword(in, "epoch");
  if (!(in >> ckpt.epoch))
    throw Error(errc::parse_failure, "checkpoint: bad epoch");
  expect_keyword(in, "val_loss");
  std::string token;
  in >> token;
  ckpt.val_loss = parse_double(token);

  expect_keyword(in, "fusion_weights");
  std::string count;
  in >> count;
  if (count != std::to_string(ckpt.params.fusion_weights.size()))
    throw Error(errc::parse_failure, "checkpoint: unexpected fusion size");
  read_doubles(in, ckpt.params.fusion_weights.data(),
               static_cast<int>(ckpt.params.fusion_weights.size()));
  expect_keyword(in, "fusion_bias");
  read_doubles(in, ckpt.params.fusion_bias.data(), stats::kTraitCount);

  expect_keyword(in, "branch");
  expect_keyword(in, "face");
  ckpt.params.face_branch = parse_regressor_params(in);
  expect_keyword(in, "branch");
  expect_keyword(in, "bg");
  ckpt.params.bg_branch = parse_regressor_params(in);
  return ckpt;
}

}  // namespace traitlab::train
