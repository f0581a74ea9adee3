#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "sketchgen/datasets.hpp"
#include "sketchgen/errors.hpp"
#include "sketchgen/generator.hpp"
#include "sketchgen/sketch.hpp"
#include "sketchgen/trainer.hpp"

namespace sketchgen {

namespace detail {

// All binary formats are little-endian with explicitly packed fields.

inline void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>(v >> (8 * i));
  out.write(buf, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>(v >> (8 * i));
  out.write(buf, 8);
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void read_exact(std::istream& in, char* buf, std::streamsize n, const char* what) {
  in.read(buf, n);
  if (in.gcount() != n) throw FormatError(std::string(what) + ": unexpected end of file");
}

inline std::uint8_t read_u8(std::istream& in, const char* what) {
  char b;
  read_exact(in, &b, 1, what);
  return static_cast<std::uint8_t>(b);
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
  char buf[4];
  read_exact(in, buf, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
  char buf[8];
  read_exact(in, buf, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(read_u64(in, what));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
  char buf[4];
  read_exact(in, buf, 4, what);
  if (buf[0] != magic[0] || buf[1] != magic[1] || buf[2] != magic[2] || buf[3] != magic[3])
    throw FormatError(std::string(what) + ": bad magic");
}

inline std::ofstream open_out(const std::string& path, const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(std::string(what) + ": cannot open " + path + " for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(std::string(what) + ": cannot open " + path);
  return in;
}

// Shortest round-trip decimal rendering.
inline void append_double(std::string& s, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  s.append(buf, res.ptr);
}

inline void check_stream(std::ostream& out, const char* what) {
  if (!out) throw FormatError(std::string(what) + ": write failed");
}

}  // namespace detail

inline constexpr std::uint32_t kSketchFormatVersion = 1;
inline constexpr std::uint32_t kFrequencyFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// A sketch together with everything needed to regenerate its frequency
/// matrix; what the CLSK file stores (frequencies themselves are not
/// written, they are redrawn from law/m/seed).
struct SketchBundle {
  Sketch sketch;
  FrequencyLaw law;
  int m = 0;
  std::uint64_t seed = 0;

  FrequencyMatrix regenerate_frequencies() const { return draw_frequencies(law, m, seed); }
};

inline void save_sketch(const std::string& path, const Sketch& sketch,
                        const FrequencyMatrix& freq) {
  if (sketch.omega_fingerprint != freq.fingerprint())
    throw IncompatibleSketchError("save_sketch: sketch not bound to these frequencies");
  auto out = detail::open_out(path, "save_sketch");
  detail::write_magic(out, "CLSK");
  detail::write_u32(out, kSketchFormatVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(freq.dim()));
  detail::write_u32(out, static_cast<std::uint32_t>(freq.size()));
  detail::write_u64(out, sketch.count);
  detail::write_u8(out, static_cast<std::uint8_t>(freq.law.kind));
  detail::write_f64(out, freq.law.sigma2);
  detail::write_u64(out, freq.seed);
  detail::write_u64(out, sketch.omega_fingerprint);
  for (Eigen::Index j = 0; j < sketch.z.size(); ++j) {
    detail::write_f64(out, sketch.z[j].real());
    detail::write_f64(out, sketch.z[j].imag());
  }
  detail::check_stream(out, "save_sketch");
}

inline SketchBundle load_sketch(const std::string& path) {
  auto in = detail::open_in(path, "load_sketch");
  detail::expect_magic(in, "CLSK", "load_sketch");
  const auto version = detail::read_u32(in, "load_sketch");
  if (version != kSketchFormatVersion)
    throw FormatError("load_sketch: unsupported version " + std::to_string(version));
  SketchBundle b;
  const auto d = detail::read_u32(in, "load_sketch");
  const auto m = detail::read_u32(in, "load_sketch");
  b.sketch.count = detail::read_u64(in, "load_sketch");
  const auto kind = detail::read_u8(in, "load_sketch");
  if (kind > 1) throw FormatError("load_sketch: unknown frequency-law kind");
  b.law.kind = static_cast<FrequencyKind>(kind);
  b.law.sigma2 = detail::read_f64(in, "load_sketch");
  b.law.dim = static_cast<int>(d);
  b.seed = detail::read_u64(in, "load_sketch");
  b.m = static_cast<int>(m);
  b.sketch.omega_fingerprint = detail::read_u64(in, "load_sketch");
  if (d < 1 || m < 1 || !(b.law.sigma2 > 0.0))
    throw FormatError("load_sketch: invalid header fields");
  if (b.sketch.omega_fingerprint != frequency_fingerprint(b.law, b.m, b.seed))
    throw FormatError("load_sketch: fingerprint does not match header fields");
  b.sketch.z.resize(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    const double re = detail::read_f64(in, "load_sketch");
    const double im = detail::read_f64(in, "load_sketch");
    b.sketch.z[j] = std::complex<double>(re, im);
  }
  return b;
}

inline void save_frequencies(const std::string& path, const FrequencyMatrix& freq) {
  auto out = detail::open_out(path, "save_frequencies");
  detail::write_magic(out, "CLFQ");
  detail::write_u32(out, kFrequencyFormatVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(freq.dim()));
  detail::write_u32(out, static_cast<std::uint32_t>(freq.size()));
  detail::write_u8(out, static_cast<std::uint8_t>(freq.law.kind));
  detail::write_f64(out, freq.law.sigma2);
  detail::write_u64(out, freq.seed);
  for (Eigen::Index j = 0; j < freq.omega.cols(); ++j)
    for (Eigen::Index i = 0; i < freq.omega.rows(); ++i) detail::write_f64(out, freq.omega(i, j));
  detail::check_stream(out, "save_frequencies");
}

inline FrequencyMatrix load_frequencies(const std::string& path) {
  auto in = detail::open_in(path, "load_frequencies");
  detail::expect_magic(in, "CLFQ", "load_frequencies");
  const auto version = detail::read_u32(in, "load_frequencies");
  if (version != kFrequencyFormatVersion)
    throw FormatError("load_frequencies: unsupported version " + std::to_string(version));
  const auto d = detail::read_u32(in, "load_frequencies");
  const auto m = detail::read_u32(in, "load_frequencies");
  const auto kind = detail::read_u8(in, "load_frequencies");
  if (kind > 1) throw FormatError("load_frequencies: unknown frequency-law kind");
  FrequencyMatrix freq;
  freq.law.kind = static_cast<FrequencyKind>(kind);
  freq.law.sigma2 = detail::read_f64(in, "load_frequencies");
  freq.law.dim = static_cast<int>(d);
  freq.seed = detail::read_u64(in, "load_frequencies");
  if (d < 1 || m < 1 || !(freq.law.sigma2 > 0.0))
    throw FormatError("load_frequencies: invalid header fields");
  freq.omega.resize(d, m);
  for (std::uint32_t j = 0; j < m; ++j)
    for (std::uint32_t i = 0; i < d; ++i) {
      const double v = detail::read_f64(in, "load_frequencies");
      if (!std::isfinite(v)) throw FormatError("load_frequencies: non-finite entry");
      freq.omega(i, j) = v;
    }
  return freq;
}

inline void save_checkpoint(const std::string& path, const GeneratorParams& params) {
  auto out = detail::open_out(path, "save_checkpoint");
  detail::write_magic(out, "CLGN");
  detail::write_u32(out, kCheckpointFormatVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(params.arch.latent_dim));
  detail::write_u32(out, static_cast<std::uint32_t>(params.arch.hidden.size()));
  for (int w : params.arch.hidden) detail::write_u32(out, static_cast<std::uint32_t>(w));
  detail::write_u32(out, static_cast<std::uint32_t>(params.arch.out_dim));
  detail::write_f64(out, params.arch.leaky_slope);
  for (const Layer& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        detail::write_f64(out, layer.weight(r, c));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) detail::write_f64(out, layer.bias[i]);
  }
  detail::check_stream(out, "save_checkpoint");
}

inline GeneratorParams load_checkpoint(const std::string& path) {
  auto in = detail::open_in(path, "load_checkpoint");
  detail::expect_magic(in, "CLGN", "load_checkpoint");
  const auto version = detail::read_u32(in, "load_checkpoint");
  if (version != kCheckpointFormatVersion)
    throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
  Architecture arch;
  arch.latent_dim = static_cast<int>(detail::read_u32(in, "load_checkpoint"));
  const auto n_hidden = detail::read_u32(in, "load_checkpoint");
  if (n_hidden > 1024) throw FormatError("load_checkpoint: implausible hidden layer count");
  arch.hidden.resize(n_hidden);
  for (auto& w : arch.hidden) w = static_cast<int>(detail::read_u32(in, "load_checkpoint"));
  arch.out_dim = static_cast<int>(detail::read_u32(in, "load_checkpoint"));
  arch.leaky_slope = detail::read_f64(in, "load_checkpoint");
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("load_checkpoint: ") + e.what());
  }
  GeneratorParams params;
  params.arch = arch;
  const auto dims = arch.layer_dims();
  params.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer& layer = params.layers[l];
    layer.weight.resize(dims[l + 1], dims[l]);
    layer.bias.resize(dims[l + 1]);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = detail::read_f64(in, "load_checkpoint");
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] = detail::read_f64(in, "load_checkpoint");
  }
  return params;
}

/// Streaming reader for sample CSVs: one sample per line, comma-separated
/// decimal floats, blank lines and lines starting with '#' skipped. The
/// first data line fixes the dimension. Parse failures carry the
/// 1-based line number.
class CsvSampleReader {
 public:
  explicit CsvSampleReader(const std::string& path)
      : path_(path), in_(path) {
    if (!in_) throw FormatError("csv: cannot open " + path);
  }

  // Fills `row` with the next sample; false at end of input.
  bool next(std::vector<double>& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::size_t begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      if (line[begin] == '#') continue;
      parse_line(line, row);
      if (dim_ < 0)
        dim_ = static_cast<int>(row.size());
      else if (static_cast<int>(row.size()) != dim_)
        throw ParseError(path_, line_no_,
                         "expected " + std::to_string(dim_) + " fields, got " +
                             std::to_string(row.size()));
      return true;
    }
    return false;
  }

  int dim() const { return dim_; }
  std::size_t line() const { return line_no_; }

 private:
  void parse_line(const std::string& line, std::vector<double>& row) {
    row.clear();
    std::size_t pos = 0;
    while (true) {
      std::size_t end = line.find(',', pos);
      const std::size_t stop = end == std::string::npos ? line.size() : end;
      std::size_t b = pos, e = stop;
      while (b < e && (line[b] == ' ' || line[b] == '\t' || line[b] == '\r')) ++b;
      while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t' || line[e - 1] == '\r')) --e;
      if (b == e) throw ParseError(path_, line_no_, "empty field");
      double value = 0.0;
      const auto res = std::from_chars(line.data() + b, line.data() + e, value);
      if (res.ec != std::errc{} || res.ptr != line.data() + e)
        throw ParseError(path_, line_no_,
                         "bad number '" + line.substr(b, e - b) + "'");
      if (!std::isfinite(value)) throw ParseError(path_, line_no_, "non-finite value");
      row.push_back(value);
      if (end == std::string::npos) break;
      pos = end + 1;
    }
  }

  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  int dim_ = -1;
};

inline Eigen::MatrixXd load_samples_csv(const std::string& path) {
  CsvSampleReader reader(path);
  std::vector<double> row;
  std::vector<double> data;
  Eigen::Index n = 0;
  while (reader.next(row)) {
    data.insert(data.end(), row.begin(), row.end());
    ++n;
  }
  const int d = reader.dim() < 0 ? 0 : reader.dim();
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = data[static_cast<std::size_t>(i) * d + j];
  return out;
}

inline void save_samples_csv(const std::string& path, const Eigen::MatrixXd& samples) {
  auto out = detail::open_out(path, "save_samples_csv");
  std::string buf;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    buf.clear();
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      if (j) buf.push_back(',');
      detail::append_double(buf, samples(i, j));
    }
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  detail::check_stream(out, "save_samples_csv");
}

/// Training trace as CSV. Row 0 is the initial (untrained) full-pool loss.
inline void save_report_csv(const std::string& path, const TrainReport& report) {
  auto out = detail::open_out(path, "save_report_csv");
  out << "iteration,epoch,loss,wall_ms\n";
  std::string buf = "0,0,";
  detail::append_double(buf, report.initial_loss);
  buf += ",0\n";
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (const auto& row : report.trace) {
    buf.clear();
    buf += std::to_string(row.iteration);
    buf.push_back(',');
    buf += std::to_string(row.epoch);
    buf.push_back(',');
    detail::append_double(buf, row.loss);
    buf.push_back(',');
    detail::append_double(buf, row.wall_ms);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  detail::check_stream(out, "save_report_csv");
}

/// Count grid as CSV: a '#' metadata line, then one line per y-row
/// (y ascending), x ascending within the line.
inline void save_histogram_csv(const std::string& path, const Histogram2D& h) {
  auto out = detail::open_out(path, "save_histogram_csv");
  std::string buf = "# bins_x=" + std::to_string(h.bins_x) + " bins_y=" + std::to_string(h.bins_y);
  buf += " range=";
  detail::append_double(buf, h.range.x_min);
  buf.push_back(':');
  detail::append_double(buf, h.range.x_max);
  buf.push_back(':');
  detail::append_double(buf, h.range.y_min);
  buf.push_back(':');
  detail::append_double(buf, h.range.y_max);
  buf += " total=" + std::to_string(h.total) + " overflow=" + std::to_string(h.overflow);
  buf.push_back('\n');
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (int iy = 0; iy < h.bins_y; ++iy) {
    buf.clear();
    for (int ix = 0; ix < h.bins_x; ++ix) {
      if (ix) buf.push_back(',');
      buf += std::to_string(h.at(ix, iy));
    }
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  detail::check_stream(out, "save_histogram_csv");
}

/// ASCII PGM (P2) rendering: log-scaled counts, white background, dark
/// high-density cells, top image row = highest y bin.
inline void save_histogram_pgm(const std::string& path, const Histogram2D& h) {
  auto out = detail::open_out(path, "save_histogram_pgm");
  std::int64_t max_count = 0;
  for (std::int64_t c : h.counts) max_count = std::max(max_count, c);
  const double denom = max_count > 0 ? std::log1p(static_cast<double>(max_count)) : 1.0;
  out << "P2\n" << h.bins_x << ' ' << h.bins_y << "\n255\n";
  std::string buf;
  for (int iy = h.bins_y - 1; iy >= 0; --iy) {
    buf.clear();
    for (int ix = 0; ix < h.bins_x; ++ix) {
      const double level =
          max_count > 0 ? std::log1p(static_cast<double>(h.at(ix, iy))) / denom : 0.0;
      const int gray = 255 - static_cast<int>(std::lround(255.0 * level));
      if (ix) buf.push_back(' ');
      buf += std::to_string(gray);
    }
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  detail::check_stream(out, "save_histogram_pgm");
}

}  // namespace sketchgen
