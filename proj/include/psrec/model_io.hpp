#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "psrec/errors.hpp"
#include "psrec/gbt.hpp"

namespace psrec {

// Plain-text model container.
//
//   GBTSVM v1
//   dim <d>
//   nbins <n>
//   level L1 | L2L | L2R   (three blocks, this order), each holding:
//     positive_bit, positive_tag, scaler_mean, scaler_std, granules <k>,
//     then per submodel: gamma, bias, nsv, and nsv "sv <coef> <v_1..v_d>" rows
//   checksum <16 hex digits>
//
// Doubles are written with 17 significant digits so a load/save cycle is
// byte-identical. The checksum (FNV-1a 64 over everything before the
// checksum line) distinguishes doctored files from stale or truncated ones.

namespace detail {

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline void write_vector(std::ostringstream& out, const char* tag,
                         const std::vector<double>& v) {
  out << tag;
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

class ModelReader {
 public:
  explicit ModelReader(std::string body) : in_(std::move(body)) {}

  std::string word(const char* what) {
    std::string w;
    if (!(in_ >> w)) throw TruncatedError(std::string("model file ends before ") + what);
    return w;
  }

  void expect(const char* literal) {
    const std::string w = word(literal);
    if (w != literal)
      throw ParseError(std::string("model file: expected '") + literal + "', found '" + w + "'");
  }

  double number(const char* what) {
    const std::string w = word(what);
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size())
      throw ParseError(std::string("model file: bad number for ") + what + ": '" + w + "'");
    return v;
  }

  long integer(const char* what) {
    const std::string w = word(what);
    char* end = nullptr;
    const long v = std::strtol(w.c_str(), &end, 10);
    if (end != w.c_str() + w.size())
      throw ParseError(std::string("model file: bad integer for ") + what + ": '" + w + "'");
    return v;
  }

  void ensure_done() {
    std::string w;
    if (in_ >> w) throw ParseError("model file: unexpected trailing content: '" + w + "'");
  }

 private:
  std::istringstream in_;
};

inline void save_level(std::ostringstream& out, const char* name, const LevelEnsemble& level) {
  out << "level " << name << '\n';
  out << "positive_bit " << level.positive_bit << '\n';
  out << "positive_tag " << level.model.positive_label_meaning() << '\n';
  write_vector(out, "scaler_mean", level.model.scaler().mean());
  write_vector(out, "scaler_std", level.model.scaler().stddev());
  out << "granules " << level.model.submodels().size() << '\n';
  for (std::size_t m = 0; m < level.model.submodels().size(); ++m) {
    const TrainedSvm& svm = level.model.submodels()[m];
    out << "submodel " << m << '\n';
    out << "gamma " << format_double(svm.gamma()) << '\n';
    out << "bias " << format_double(svm.bias()) << '\n';
    out << "nsv " << svm.support_vectors().size() << '\n';
    for (std::size_t i = 0; i < svm.support_vectors().size(); ++i) {
      out << "sv " << format_double(svm.coef()[i]);
      for (double v : svm.support_vectors()[i]) out << ' ' << format_double(v);
      out << '\n';
    }
  }
}

inline std::vector<double> read_vector(ModelReader& in, const char* tag, std::size_t dim) {
  in.expect(tag);
  std::vector<double> v(dim);
  for (std::size_t d = 0; d < dim; ++d) v[d] = in.number(tag);
  return v;
}

inline LevelEnsemble load_level(ModelReader& in, const char* name, std::size_t dim) {
  in.expect("level");
  const std::string got = in.word("level name");
  if (got != name)
    throw ParseError("model file: expected level " + std::string(name) + ", found " + got);
  in.expect("positive_bit");
  const long bit = in.integer("positive_bit");
  if (bit != 0 && bit != 1) throw ParseError("model file: positive_bit must be 0 or 1");
  in.expect("positive_tag");
  const std::string tag = in.word("positive_tag");
  std::vector<double> mean = read_vector(in, "scaler_mean", dim);
  std::vector<double> stddev = read_vector(in, "scaler_std", dim);
  in.expect("granules");
  const long n_granules = in.integer("granules");
  if (n_granules < 1) throw ParseError("model file: granules must be >= 1");

  std::vector<TrainedSvm> submodels;
  submodels.reserve(static_cast<std::size_t>(n_granules));
  for (long m = 0; m < n_granules; ++m) {
    in.expect("submodel");
    const long index = in.integer("submodel index");
    if (index != m) throw ParseError("model file: submodel blocks out of order");
    in.expect("gamma");
    const double gamma = in.number("gamma");
    in.expect("bias");
    const double bias = in.number("bias");
    in.expect("nsv");
    const long nsv = in.integer("nsv");
    if (nsv < 0) throw ParseError("model file: nsv must be >= 0");
    std::vector<std::vector<double>> sv;
    std::vector<double> coef;
    sv.reserve(static_cast<std::size_t>(nsv));
    coef.reserve(static_cast<std::size_t>(nsv));
    for (long i = 0; i < nsv; ++i) {
      in.expect("sv");
      coef.push_back(in.number("sv coef"));
      std::vector<double> row(dim);
      for (std::size_t d = 0; d < dim; ++d) row[d] = in.number("sv value");
      sv.push_back(std::move(row));
    }
    submodels.emplace_back(std::move(sv), std::move(coef), bias, gamma);
  }
  GranularModel model(std::move(submodels), FeatureScaler(std::move(mean), std::move(stddev)),
                      tag);
  return LevelEnsemble{std::move(model), static_cast<int>(bit)};
}

}  // namespace detail

inline std::string serialize_model(const GbtModel& model) {
  std::ostringstream out;
  out << "GBTSVM v1\n";
  out << "dim " << model.dim() << '\n';
  out << "nbins " << model.nbins() << '\n';
  detail::save_level(out, "L1", model.level1());
  detail::save_level(out, "L2L", model.level2_left());
  detail::save_level(out, "L2R", model.level2_right());
  std::string body = out.str();
  char sum[32];
  std::snprintf(sum, sizeof(sum), "checksum %016llx\n",
                static_cast<unsigned long long>(detail::fnv1a64(body)));
  return body + sum;
}

inline void save_model(const GbtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIoError("cannot write model file: " + path.string());
  out << serialize_model(model);
  if (!out) throw ModelIoError("write failed: " + path.string());
}

inline GbtModel deserialize_model(const std::string& text) {
  // Version gate first: a file for another format version is reported as
  // such even if the rest of it would not parse.
  constexpr const char* kMagic = "GBTSVM v1\n";
  const std::size_t first_nl = text.find('\n');
  if (first_nl == std::string::npos) throw TruncatedError("model file: no header line");
  const std::string header = text.substr(0, first_nl + 1);
  if (header != kMagic) {
    if (header.rfind("GBTSVM", 0) == 0)
      throw VersionError("model file: unsupported version: " + text.substr(0, first_nl));
    throw VersionError("model file: not a GBTSVM model");
  }

  const std::size_t sum_pos = text.rfind("checksum ");
  if (sum_pos == std::string::npos || (sum_pos != 0 && text[sum_pos - 1] != '\n'))
    throw TruncatedError("model file: checksum line missing");
  const std::string body = text.substr(0, sum_pos);
  std::string sum_line = text.substr(sum_pos);
  if (!sum_line.empty() && sum_line.back() == '\n') sum_line.pop_back();
  char expected[32];
  std::snprintf(expected, sizeof(expected), "checksum %016llx",
                static_cast<unsigned long long>(detail::fnv1a64(body)));
  if (sum_line != expected) throw ChecksumError("model file: checksum mismatch");

  detail::ModelReader in(body.substr(header.size()));
  in.expect("dim");
  const long dim = in.integer("dim");
  in.expect("nbins");
  const long nbins = in.integer("nbins");
  if (dim < 5 || nbins < 1 || dim != nbins + 4)
    throw ParseError("model file: dim and nbins disagree");

  const std::size_t d = static_cast<std::size_t>(dim);
  LevelEnsemble level1 = detail::load_level(in, "L1", d);
  LevelEnsemble level2_left = detail::load_level(in, "L2L", d);
  LevelEnsemble level2_right = detail::load_level(in, "L2R", d);
  in.ensure_done();
  return GbtModel(std::move(level1), std::move(level2_left), std::move(level2_right),
                  static_cast<int>(nbins));
}

inline GbtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace psrec
