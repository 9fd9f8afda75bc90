#include <doctest.h>

#include <fstream>
#include <limits>

#include "arrayext/scenario_config.hpp"
#include "arrayext/serialization.hpp"
#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"

using namespace arrayext;
using testing_support::TempDir;

namespace {

DictionaryPair random_pair(std::mt19937_64& rng, const AngleInterval& grid) {
  DictionaryPair p;
  p.low_config = {2, 2, 0.5};
  p.high_config = {3, 3, 0.5};
  RealMatrix st = oracle::gaussian(26, 12, rng);
  for (Eigen::Index j = 0; j < st.cols(); ++j) st.col(j).normalize();
  p.d_low = st.topRows(8);
  p.d_high = st.bottomRows(18);
  p.grid = grid;
  p.lambda_train = 0.015;
  p.train_error = 0.123456789;
  p.n_iters = 2;
  p.seed = 0xfeedfacecafebeefULL;
  p.log = {{1, 3.5, 2.25, 0.1, 0}, {2, 2.0, 1.0 / 3.0, 0.05, 2}};
  return p;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_CASE("signal container roundtrip") {
  const TempDir dir("arrayext_io");
  std::mt19937_64 rng(1);
  const ComplexMatrix z = oracle::complex_gaussian(7, 5, rng);
  io::write_signal(dir / "a.sig", z);
  CHECK(io::read_signal(dir / "a.sig") == z);
  CHECK(std::filesystem::file_size(dir / "a.sig") == 4 + 4 + 8 + 8 + 7 * 5 * 16);

  io::write_signal(dir / "empty.sig", ComplexMatrix(0, 3));
  CHECK(io::read_signal(dir / "empty.sig").cols() == 3);

  SUBCASE("bad magic") {
    write_bytes(dir / "bad.sig", "XXXX0000000000000000000000");
    CHECK_THROWS_AS(io::read_signal(dir / "bad.sig"), io::IoError);
  }
  SUBCASE("truncated") {
    std::filesystem::resize_file(dir / "a.sig", std::filesystem::file_size(dir / "a.sig") - 8);
    CHECK_THROWS_AS(io::read_signal(dir / "a.sig"), io::IoError);
  }
  SUBCASE("wrong container kind") {
    io::write_dictionary(dir / "d.dict", {RealMatrix::Ones(2, 2), 0.1, 3});
    CHECK_THROWS_AS(io::read_signal(dir / "d.dict"), io::IoError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(io::read_signal(dir / "nope.sig"), io::IoError); }
}

TEST_CASE("dictionary container roundtrip") {
  const TempDir dir("arrayext_io");
  std::mt19937_64 rng(2);
  const io::StoredDictionary d{oracle::gaussian(6, 9, rng), 0.01, 300};
  io::write_dictionary(dir / "d.dict", d);
  const io::StoredDictionary back = io::read_dictionary(dir / "d.dict");
  CHECK(back.atoms == d.atoms);
  CHECK(back.lambda == 0.01);
  CHECK(back.iterations == 300);

  io::write_dictionary_csv(dir / "d.csv", RealMatrix::Identity(2, 3));
  std::ifstream in(dir / "d.csv");
  std::string l1;
  std::string l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "1,0,0");
  CHECK(l2 == "0,1,0");
}

TEST_CASE("bank directory roundtrip") {
  const TempDir dir("arrayext_bank");
  std::mt19937_64 rng(3);
  GridDictionaryBank bank;
  bank.pairs.push_back(random_pair(rng, {10.0, 35.0}));
  bank.pairs.push_back(random_pair(rng, {20.0, 45.0}));
  io::write_bank(dir.path(), bank);
  const GridDictionaryBank back = io::read_bank(dir.path());
  REQUIRE(back.pairs.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const DictionaryPair& a = bank.pairs[i];
    const DictionaryPair& b = back.pairs[i];
    CHECK(b.d_low == a.d_low);
    CHECK(b.d_high == a.d_high);
    CHECK(b.grid == a.grid);
    CHECK(b.low_config == a.low_config);
    CHECK(b.high_config == a.high_config);
    CHECK(b.lambda_train == a.lambda_train);
    CHECK(b.train_error == a.train_error);
    CHECK(b.n_iters == a.n_iters);
    CHECK(b.seed == a.seed);
    REQUIRE(b.log.size() == 2);
    CHECK(b.log[1].surrogate_after == a.log[1].surrogate_after);
    CHECK(b.log[1].replaced_atoms == 2);
  }

  SUBCASE("logs are optional") {
    std::filesystem::remove(dir / "pair_000_log.csv");
    CHECK(io::read_bank(dir.path()).pairs[0].log.empty());
  }
  SUBCASE("missing manifest") {
    std::filesystem::remove(dir / "manifest.txt");
    CHECK_THROWS_AS(io::read_bank(dir.path()), io::IoError);
  }
  SUBCASE("corrupt manifest") {
    write_bytes(dir / "manifest.txt", "pair file=pair_000.dict grid=10:35\n");
    CHECK_THROWS_AS(io::read_bank(dir.path()), io::IoError);
  }
}

TEST_CASE("spectrum CSV") {
  const TempDir dir("arrayext_io");
  MusicSpectrum s{{0.0, 0.5}, {1.5, 2.0}, {2, 2, 0.5}};
  io::write_spectrum_csv(dir / "s.csv", s);
  std::ifstream in(dir / "s.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "angle_deg,p_mu");
  std::getline(in, line);
  CHECK(line == "0,1.5");
}

TEST_CASE("shortest roundtrip formatting") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-10.0) == "-10");
  CHECK(io::format_double(1e-300) == "1e-300");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(io::format_double(v)) == v);
  }
}

TEST_CASE("scenario INI parsing") {
  const ScenarioConfig c = parse_scenario(R"(
; comment
[array]
low = 6x6
high = 16x16

[scene]
grids = 10:35, 20:45
test_grid = 20:45

[training]
train_snr_db = noiseless
lambda_grid = 0.005, 0.01

[prediction]
lambda = 0.02

[evaluation]
test_snr_db = -10:5:0
threads = 2

[run]
seed = 18446744073709551615
)");
  CHECK(c.low == ArrayConfig{6, 6, 0.5});
  CHECK(c.grids == std::vector<AngleInterval>{{10.0, 35.0}, {20.0, 45.0}});
  CHECK_FALSE(c.train_snr_db.has_value());
  CHECK(c.lambda_grid == std::vector<double>{0.005, 0.01});
  CHECK(c.prediction.lambda == 0.02);
  CHECK(c.test_snr_db == std::vector<double>{-10.0, -5.0, 0.0});
  CHECK(c.threads == 2);
  CHECK(c.seed == std::numeric_limits<std::uint64_t>::max());
  CHECK(c.l_atoms == ScenarioConfig{}.l_atoms);

  SUBCASE("canonical text parses back to the same configuration") {
    std::string ini;
    std::string section;
    std::istringstream lines(c.canonical());
    for (std::string line; std::getline(lines, line);) {
      const auto dot = line.find('.');
      const std::string sec = line.substr(0, dot);
      if (sec != section) ini += "[" + (section = sec) + "]\n";
      ini += line.substr(dot + 1) + "\n";
    }
    CHECK(parse_scenario(ini).canonical() == c.canonical());
    CHECK(parse_scenario(ini).hash() == c.hash());
  }
}

TEST_CASE("scenario INI errors") {
  CHECK_THROWS_AS(parse_scenario("[array]\nlow = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[array]\nwidth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[colors]\nred = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("seed = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[evaluation]\nn_trials = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[evaluation]\nn_trials = -4\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[array]\nlow = 20x20\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[training]\nl_atoms = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[scene]\ntest_grid = 30:40\n"), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/arrayext.ini"), ConfigError);
  CHECK(parse_scenario("").canonical() == ScenarioConfig{}.canonical());
}

TEST_CASE("number lists and SNR text") {
  CHECK(parse_number_list("1, 2.5,-3") == std::vector<double>{1.0, 2.5, -3.0});
  CHECK(parse_number_list("0:0.5:1") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(parse_number_list("-10:10:20").size() == 4);
  CHECK_THROWS_AS(parse_number_list(""), ConfigError);
  CHECK_THROWS_AS(parse_number_list("1:0:3"), ConfigError);
  CHECK_THROWS_AS(parse_number_list("a"), ConfigError);
  CHECK(parse_snr("noiseless") == std::nullopt);
  CHECK(parse_snr("-7.5") == -7.5);
}

TEST_CASE("full-size scale") {
  ScenarioConfig c;
  const std::uint64_t desk = c.hash();
  c.apply_paper_scale();
  c.validate();
  CHECK(c.hash() != desk);
  CHECK(c.n_trials == 10000);
}
