#pragma once

#include <filesystem>
#include <string>

#include "arrayext/coupled_dict.hpp"
#include "arrayext/music.hpp"

namespace arrayext::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Signal container, little-endian:
//   char[4] "AXSG" | u32 version (1) | u64 rows | u64 cols |
//   rows * cols complex values, column-major, each as (f64 re, f64 im).
void write_signal(const std::filesystem::path& path, const ComplexMatrix& data);
ComplexMatrix read_signal(const std::filesystem::path& path);

// Dictionary container, little-endian:
//   char[4] "AXDC" | u32 version (1) | u64 n_features | u64 n_atoms |
//   f64 lambda | u64 iterations | n_features * n_atoms f64, column-major.
struct StoredDictionary {
  RealMatrix atoms;
  double lambda = 0.0;
  std::uint64_t iterations = 0;
};
void write_dictionary(const std::filesystem::path& path, const StoredDictionary& dict);
StoredDictionary read_dictionary(const std::filesystem::path& path);

/// Atoms as CSV, one row per feature, one column per atom.
void write_dictionary_csv(const std::filesystem::path& path, const RealMatrix& atoms);

/// Bank directory: manifest.txt plus pair_NNN.dict (stacked [D_l; D_h]) and
/// pair_NNN_log.csv (ODL trace) per grid.
void write_bank(const std::filesystem::path& dir, const GridDictionaryBank& bank);
GridDictionaryBank read_bank(const std::filesystem::path& dir);

/// Two columns: angle_deg, p_mu.
void write_spectrum_csv(const std::filesystem::path& path, const MusicSpectrum& spectrum);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace arrayext::io
