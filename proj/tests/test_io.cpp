// Copyright (c) 2026 The multimix authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "multimix/io.hpp"

using namespace multimix;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("fmt_g17: round trips and uses '.' as the decimal separator") {
  CHECK(fmt_g17(0.0) == "0");
  CHECK(fmt_g17(1.0) == "1");
  CHECK(fmt_g17(-2.5) == "-2.5");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -1.2345678901234567e18, 3.14159}) {
    const std::string s = fmt_g17(v);
    CHECK(s.find(',') == std::string::npos);
    CHECK(std::strtod(s.c_str(), nullptr) == v);  // 17 digits round trip exactly
  }
}

TEST_CASE("CsvWriter: rows joined by commas with bare newlines") {
  const std::string path = "test_io_rows.csv";
  {
    CsvWriter csv(path);
    csv.row({"a", "b", "c"});
    csv.row({fmt_g17(1.5), "2"});
    csv.row({});
  }
  CHECK(slurp(path) == "a,b,c\n1.5,2\n\n");
  std::remove(path.c_str());
  CHECK_THROWS(CsvWriter("no_such_dir_xyz/file.csv"));
}

TEST_CASE("PPM: P6 and P5 round trip") {
  const std::string path = "test_io_img.ppm";
  PpmImage rgb;
  rgb.width = 3;
  rgb.height = 2;
  rgb.channels = 3;
  for (int i = 0; i < 18; ++i) rgb.pixels.push_back(static_cast<std::uint8_t>(i * 13));
  write_ppm(path, rgb);
  const PpmImage back = read_ppm(path);
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.channels == 3);
  CHECK(back.pixels == rgb.pixels);

  PpmImage gray;
  gray.width = 2;
  gray.height = 2;
  gray.channels = 1;
  gray.pixels = {0, 85, 170, 255};
  write_ppm(path, gray);
  const PpmImage gback = read_ppm(path);
  CHECK(gback.channels == 1);
  CHECK(gback.pixels == gray.pixels);
  std::remove(path.c_str());
}

TEST_CASE("PPM: header validation and comment tolerance on read") {
  const std::string path = "test_io_bad.ppm";
  PpmImage bad;
  bad.width = 2;
  bad.height = 2;
  bad.channels = 2;
  bad.pixels.assign(8, 0);
  CHECK_THROWS(write_ppm(path, bad));
  bad.channels = 3;
  CHECK_THROWS(write_ppm(path, bad));  // 8 != 2*2*3

  spit(path, "P6\n# a comment\n2 1\n255\nabcdef");
  const PpmImage commented = read_ppm(path);
  CHECK(commented.width == 2);
  CHECK(commented.height == 1);
  CHECK(commented.pixels[0] == 'a');

  spit(path, "P6\n2 1\n65535\nabcdef");
  CHECK_THROWS(read_ppm(path));  // unsupported maxval
  spit(path, "P3\n2 1\n255\n");
  CHECK_THROWS(read_ppm(path));  // ASCII PNM is not supported
  spit(path, "P6\n2 2\n255\nabc");
  CHECK_THROWS(read_ppm(path));  // truncated raster
  std::remove(path.c_str());
  CHECK_THROWS(read_ppm("no_such_file.ppm"));
}

TEST_CASE("read_config_file: key = value with comments and trimming") {
  const std::string path = "test_io_conf.txt";
  spit(path,
       "# run settings\n"
       "  k = 5 \n"
       "alpha=1.0   # inline comment\n"
       "\n"
       "out_dir = results/run a\n");
  const auto conf = read_config_file(path);
  CHECK(conf.size() == 3);
  CHECK(conf.at("k") == "5");
  CHECK(conf.at("alpha") == "1.0");
  CHECK(conf.at("out_dir") == "results/run a");

  spit(path, "k = 1\nthis line has no equals\n");
  CHECK_THROWS_WITH_AS(read_config_file(path), doctest::Contains(":2"), std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS(read_config_file("no_such_config.txt"));
}

TEST_CASE("file_checksum: FNV-1a known vectors and content sensitivity") {
  const std::string path = "test_io_sum.bin";
  spit(path, "");
  CHECK(file_checksum(path) == 0xcbf29ce484222325ULL);  // FNV offset basis
  spit(path, "a");
  CHECK(file_checksum(path) == 0xaf63dc4c8601ec8cULL);  // published FNV-1a("a")
  spit(path, "foobar");
  CHECK(file_checksum(path) == 0x85944171f73967e8ULL);  // published FNV-1a("foobar")
  const std::uint64_t before = file_checksum(path);
  spit(path, "foobaz");
  CHECK(file_checksum(path) != before);
  std::remove(path.c_str());
}
