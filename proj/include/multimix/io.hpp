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

#ifndef MULTIMIX_IO_HPP
#define MULTIMIX_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace multimix {

/// Fixed float formatting for every CSV we emit: 17 significant digits,
/// '.' decimal separator regardless of locale.
std::string fmt_g17(double v);

/// Minimal CSV writer; fields are written verbatim, rows end with '\n'.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

struct PpmImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 = P5, 3 = P6
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

/// Binary P6/P5, maxval 255, no comments in output.
void write_ppm(const std::string& path, const PpmImage& image);

/// Reads binary P5/P6 (comments tolerated, maxval must be 255).
PpmImage read_ppm(const std::string& path);

/// Line-based `key = value` config file; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// FNV-1a over a file's bytes, for the run manifest.
std::uint64_t file_checksum(const std::string& path);

}  // namespace multimix

#endif  // MULTIMIX_IO_HPP
