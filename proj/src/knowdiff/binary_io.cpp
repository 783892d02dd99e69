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

#include "knowdiff/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "knowdiff/error.hpp"

namespace knowdiff {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace {
constexpr std::size_t kHeaderSize = 4 + 4 + 8;
constexpr std::size_t kTrailerSize = 4;
}  // namespace

void BinaryWriter::PutRaw(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  bytes_.insert(bytes_.end(), p, p + n);
}

void BinaryWriter::PutU32(std::uint32_t v) { PutRaw(&v, sizeof v); }
void BinaryWriter::PutU64(std::uint64_t v) { PutRaw(&v, sizeof v); }
void BinaryWriter::PutI64(std::int64_t v) { PutRaw(&v, sizeof v); }
void BinaryWriter::PutF64(double v) { PutRaw(&v, sizeof v); }

void BinaryWriter::PutString(std::string_view s) {
  PutU64(s.size());
  PutRaw(s.data(), s.size());
}

void BinaryWriter::PutF64Array(std::span<const double> values) {
  PutU64(values.size());
  PutRaw(values.data(), values.size_bytes());
}

void BinaryReader::GetRaw(void* out, std::size_t n) {
  if (bytes_.size() - pos_ < n) {
    Fail(ErrorCode::kTruncated, "unexpected end of payload");
  }
  std::memcpy(out, bytes_.data() + pos_, n);
  pos_ += n;
}

std::uint32_t BinaryReader::GetU32() {
  std::uint32_t v;
  GetRaw(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::GetU64() {
  std::uint64_t v;
  GetRaw(&v, sizeof v);
  return v;
}

std::int64_t BinaryReader::GetI64() {
  std::int64_t v;
  GetRaw(&v, sizeof v);
  return v;
}

double BinaryReader::GetF64() {
  double v;
  GetRaw(&v, sizeof v);
  return v;
}

std::string BinaryReader::GetString() {
  const std::uint64_t n = GetU64();
  if (n > bytes_.size() - pos_) Fail(ErrorCode::kTruncated, "string overruns payload");
  std::string s(n, '\0');
  GetRaw(s.data(), n);
  return s;
}

std::vector<double> BinaryReader::GetF64Array() {
  const std::uint64_t n = GetU64();
  if (n > (bytes_.size() - pos_) / sizeof(double)) {
    Fail(ErrorCode::kTruncated, "array overruns payload");
  }
  std::vector<double> v(n);
  GetRaw(v.data(), n * sizeof(double));
  return v;
}

void BinaryReader::ExpectEnd() const {
  if (!AtEnd()) Fail(ErrorCode::kTruncated, "trailing bytes in payload");
}

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks for very large buffers.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> SealContainer(std::string_view magic,
                                        std::uint32_t version,
                                        std::span<const std::uint8_t> payload) {
  std::uint8_t tag[4] = {0, 0, 0, 0};
  std::memcpy(tag, magic.data(), std::min<std::size_t>(magic.size(), 4));
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + payload.size() + kTrailerSize);
  out.insert(out.end(), tag, tag + 4);
  std::uint8_t buf[8];
  std::memcpy(buf, &version, 4);
  out.insert(out.end(), buf, buf + 4);
  const std::uint64_t size = payload.size();
  std::memcpy(buf, &size, 8);
  out.insert(out.end(), buf, buf + 8);
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = Crc32(out);
  std::memcpy(buf, &crc, 4);
  out.insert(out.end(), buf, buf + 4);
  return out;
}

std::vector<std::uint8_t> OpenContainer(std::span<const std::uint8_t> file,
                                        std::string_view magic,
                                        std::uint32_t version) {
  if (file.size() < 4) Fail(ErrorCode::kTruncated, "file shorter than header");
  if (std::memcmp(file.data(), magic.data(), 4) != 0) {
    Fail(ErrorCode::kBadMagic, "not a " + std::string(magic) + " file");
  }
  if (file.size() < kHeaderSize) Fail(ErrorCode::kTruncated, "file shorter than header");
  std::uint32_t file_version;
  std::memcpy(&file_version, file.data() + 4, 4);
  if (file_version != version) {
    Fail(ErrorCode::kVersionMismatch,
         "format version " + std::to_string(file_version) + ", expected " +
             std::to_string(version));
  }
  std::uint64_t payload_size;
  std::memcpy(&payload_size, file.data() + 8, 8);
  if (file.size() - kHeaderSize < kTrailerSize ||
      payload_size > file.size() - kHeaderSize - kTrailerSize) {
    Fail(ErrorCode::kTruncated, "payload shorter than declared size");
  }
  if (file.size() != kHeaderSize + payload_size + kTrailerSize) {
    Fail(ErrorCode::kTruncated, "file size does not match declared payload");
  }
  std::uint32_t stored;
  std::memcpy(&stored, file.data() + kHeaderSize + payload_size, 4);
  if (Crc32(file.first(kHeaderSize + payload_size)) != stored) {
    Fail(ErrorCode::kChecksum, "checksum mismatch");
  }
  const auto body = file.subspan(kHeaderSize, payload_size);
  return {body.begin(), body.end()};
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace knowdiff
