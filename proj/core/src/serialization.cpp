#include "arrayext/serialization.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace arrayext::io {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  void magic(const char (&tag)[5]) { out_.write(tag, 4); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  template <typename T>
  void put_le(T v) {
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(bytes.data(), bytes.size());
  }

  fs::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "' for reading");
  }

  void expect_magic(const char (&tag)[5]) {
    std::array<char, 4> got{};
    in_.read(got.data(), 4);
    if (!in_ || std::memcmp(got.data(), tag, 4) != 0) {
      throw IoError("'" + path_.string() + "' is not a " + std::string(tag, 4) + " container");
    }
    if (u32() != kVersion) throw IoError("'" + path_.string() + "' has an unsupported version");
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw IoError("'" + path_.string() + "' has trailing bytes");
  }

 private:
  template <typename T>
  T get_le() {
    std::array<unsigned char, sizeof(T)> bytes{};
    in_.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in_) throw IoError("'" + path_.string() + "' is truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
    return v;
  }

  fs::path path_;
  std::ifstream in_;
};

// Guards against absurd headers before allocating.
void check_dims(std::uint64_t rows, std::uint64_t cols, std::uintmax_t file_size, std::uint64_t bytes_per_entry,
                std::uint64_t header, const fs::path& path) {
  if (rows != 0 && cols > (file_size / bytes_per_entry) / rows) throw IoError("'" + path.string() + "' is truncated");
  if (header + rows * cols * bytes_per_entry != file_size) {
    throw IoError("'" + path.string() + "' size does not match its header");
  }
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_signal(const fs::path& path, const ComplexMatrix& data) {
  Writer w(path);
  w.magic("AXSG");
  w.u32(kVersion);
  w.u64(static_cast<std::uint64_t>(data.rows()));
  w.u64(static_cast<std::uint64_t>(data.cols()));
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      w.f64(data(r, c).real());
      w.f64(data(r, c).imag());
    }
  }
  w.finish();
}

ComplexMatrix read_signal(const fs::path& path) {
  Reader r(path);
  r.expect_magic("AXSG");
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  check_dims(rows, cols, fs::file_size(path), 16, 24, path);
  ComplexMatrix data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double re = r.f64();
      const double im = r.f64();
      data(i, c) = Complex(re, im);
    }
  }
  r.expect_end();
  return data;
}

void write_dictionary(const fs::path& path, const StoredDictionary& dict) {
  Writer w(path);
  w.magic("AXDC");
  w.u32(kVersion);
  w.u64(static_cast<std::uint64_t>(dict.atoms.rows()));
  w.u64(static_cast<std::uint64_t>(dict.atoms.cols()));
  w.f64(dict.lambda);
  w.u64(dict.iterations);
  for (Eigen::Index c = 0; c < dict.atoms.cols(); ++c) {
    for (Eigen::Index i = 0; i < dict.atoms.rows(); ++i) w.f64(dict.atoms(i, c));
  }
  w.finish();
}

StoredDictionary read_dictionary(const fs::path& path) {
  Reader r(path);
  r.expect_magic("AXDC");
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  StoredDictionary out;
  out.lambda = r.f64();
  out.iterations = r.u64();
  check_dims(rows, cols, fs::file_size(path), 8, 40, path);
  out.atoms.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < out.atoms.cols(); ++c) {
    for (Eigen::Index i = 0; i < out.atoms.rows(); ++i) out.atoms(i, c) = r.f64();
  }
  r.expect_end();
  return out;
}

void write_dictionary_csv(const fs::path& path, const RealMatrix& atoms) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    for (Eigen::Index c = 0; c < atoms.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(atoms(i, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace {

std::string array_text(const ArrayConfig& a) {
  return std::to_string(a.n_tx) + "x" + std::to_string(a.n_rx) + "@" + format_double(a.spacing);
}

ArrayConfig parse_array(const std::string& text) {
  ArrayConfig a;
  char x = 0;
  char at = 0;
  std::istringstream is(text);
  if (!(is >> a.n_tx >> x >> a.n_rx >> at >> a.spacing) || x != 'x' || at != '@' || !is.eof()) {
    throw IoError("malformed array '" + text + "' in bank manifest (expected MxN@spacing)");
  }
  a.validate();
  return a;
}

double parse_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("manifest key '" + key + "' has non-numeric value '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("manifest key '" + key + "' has non-integer value '" + text + "'");
  }
  return v;
}

std::string pair_stem(std::size_t i) {
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "pair_%03zu", i);
  return buf.data();
}

// The ODL trace is optional; a bank without it loads with an empty log.
std::vector<OdlIterationLog> read_log(const fs::path& path) {
  std::vector<OdlIterationLog> log;
  std::ifstream in(path);
  if (!in) return log;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream is(line);
    for (std::string cell; std::getline(is, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw IoError("malformed line in '" + path.string() + "': " + line);
    OdlIterationLog e;
    e.iteration = static_cast<int>(parse_u64(cells[0], "iteration"));
    e.surrogate_before = parse_double(cells[1], "surrogate_before");
    e.surrogate_after = parse_double(cells[2], "surrogate_after");
    e.batch_relative_error = parse_double(cells[3], "batch_relative_error");
    e.replaced_atoms = static_cast<int>(parse_u64(cells[4], "replaced_atoms"));
    log.push_back(e);
  }
  return log;
}

}  // namespace

void write_bank(const fs::path& dir, const GridDictionaryBank& bank) {
  bank.validate();
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in '" + dir.string() + "'");
  manifest << "# arrayext dictionary bank, one coupled pair per line\n";
  for (std::size_t i = 0; i < bank.pairs.size(); ++i) {
    const DictionaryPair& p = bank.pairs[i];
    const std::string stem = pair_stem(i);
    write_dictionary(dir / (stem + ".dict"),
                     StoredDictionary{p.stacked(), p.lambda_train, static_cast<std::uint64_t>(p.n_iters)});

    std::ofstream log(dir / (stem + "_log.csv"), std::ios::trunc);
    log << "iteration,surrogate_before,surrogate_after,batch_relative_error,replaced_atoms\n";
    for (const auto& e : p.log) {
      log << e.iteration << ',' << format_double(e.surrogate_before) << ',' << format_double(e.surrogate_after)
          << ',' << format_double(e.batch_relative_error) << ',' << e.replaced_atoms << '\n';
    }

    manifest << "pair file=" << stem << ".dict"
             << " grid=" << p.grid.to_string() << " low=" << array_text(p.low_config)
             << " high=" << array_text(p.high_config) << " atoms=" << p.n_atoms()
             << " lambda=" << format_double(p.lambda_train) << " train_error=" << format_double(p.train_error)
             << " iterations=" << p.n_iters << " seed=" << p.seed << '\n';
  }
  manifest.flush();
  if (!manifest) throw IoError("write to manifest in '" + dir.string() + "' failed");
}

GridDictionaryBank read_bank(const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("no manifest.txt in '" + dir.string() + "'");

  GridDictionaryBank bank;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word != "pair") throw IoError("manifest line " + std::to_string(line_no) + " does not start with 'pair'");

    std::map<std::string, std::string> kv;
    while (is >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos) throw IoError("manifest line " + std::to_string(line_no) + ": expected key=value");
      kv[word.substr(0, eq)] = word.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) throw IoError("manifest line " + std::to_string(line_no) + " lacks '" + key + "'");
      return it->second;
    };

    DictionaryPair p;
    p.grid = AngleInterval::parse(need("grid"));
    p.low_config = parse_array(need("low"));
    p.high_config = parse_array(need("high"));
    p.lambda_train = parse_double(need("lambda"), "lambda");
    p.train_error = parse_double(need("train_error"), "train_error");
    p.n_iters = static_cast<int>(parse_u64(need("iterations"), "iterations"));
    p.seed = parse_u64(need("seed"), "seed");

    const StoredDictionary stored = read_dictionary(dir / need("file"));
    const Eigen::Index low_rows = 2 * p.low_config.virtual_size();
    if (stored.atoms.rows() != low_rows + 2 * p.high_config.virtual_size()) {
      throw IoError("dictionary '" + need("file") + "' does not match the manifest array sizes");
    }
    if (static_cast<std::uint64_t>(stored.atoms.cols()) != parse_u64(need("atoms"), "atoms")) {
      throw IoError("dictionary '" + need("file") + "' atom count disagrees with the manifest");
    }
    p.d_low = stored.atoms.topRows(low_rows);
    p.d_high = stored.atoms.bottomRows(stored.atoms.rows() - low_rows);
    p.log = read_log(dir / (fs::path(need("file")).stem().string() + "_log.csv"));
    bank.pairs.push_back(std::move(p));
  }
  bank.validate();
  return bank;
}

void write_spectrum_csv(const fs::path& path, const MusicSpectrum& spectrum) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "angle_deg,p_mu\n";
  for (std::size_t i = 0; i < spectrum.angles_deg.size(); ++i) {
    out << format_double(spectrum.angles_deg[i]) << ',' << format_double(spectrum.values[i]) << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace arrayext::io
