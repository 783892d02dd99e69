// Copyright 2026 The knowdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared container for every binary artifact (libraries, logs, checkpoints):
//
//   magic[4] | version u32 | payload_size u64 | payload | crc32 u32
//
// All integers and doubles are little-endian. The CRC covers everything
// before it.

#ifndef KNOWDIFF_BINARY_IO_HPP_
#define KNOWDIFF_BINARY_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace knowdiff {

class BinaryWriter {
 public:
  void PutU32(std::uint32_t v);
  void PutU64(std::uint64_t v);
  void PutI64(std::int64_t v);
  void PutF64(double v);
  void PutString(std::string_view s);
  void PutF64Array(std::span<const double> values);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  void PutRaw(const void* data, std::size_t n);
  std::vector<std::uint8_t> bytes_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t GetU32();
  std::uint64_t GetU64();
  std::int64_t GetI64();
  double GetF64();
  std::string GetString();
  std::vector<double> GetF64Array();

  bool AtEnd() const { return pos_ == bytes_.size(); }
  // Fails with kTruncated unless every byte was consumed.
  void ExpectEnd() const;

 private:
  void GetRaw(void* out, std::size_t n);
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Wraps `payload` in the container and returns the full file image.
std::vector<std::uint8_t> SealContainer(std::string_view magic,
                                        std::uint32_t version,
                                        std::span<const std::uint8_t> payload);

// Validates magic, version, length and checksum (in that order, each with its
// own error code) and returns the payload.
std::vector<std::uint8_t> OpenContainer(std::span<const std::uint8_t> file,
                                        std::string_view magic,
                                        std::uint32_t version);

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);

void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);

}  // namespace knowdiff

#endif  // KNOWDIFF_BINARY_IO_HPP_
