#include "aggmorph/mask_io.h"

#include <cctype>
#include <charconv>

#include "aggmorph/error.h"
#include "aggmorph/text_format.h"

namespace aggmorph {
namespace {

class PgmScanner {
 public:
  explicit PgmScanner(std::string_view bytes) : bytes_(bytes) {}

  // Next whitespace-delimited token, skipping '#' comments. Empty at end.
  std::string_view Token() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    const size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
           bytes_[pos_] != '#') {
      ++pos_;
    }
    return bytes_.substr(start, pos_ - start);
  }

  long Number(const char* what) {
    const size_t at = pos_;
    const std::string_view tok = Token();
    if (tok.empty()) {
      Fail(ErrorCode::kTruncatedFile, std::string("missing ") + what + " at byte " + std::to_string(at));
    }
    long value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || value < 0) {
      Fail(ErrorCode::kMalformedRecord,
           std::string("bad ") + what + " '" + std::string(tok) + "' near byte " + std::to_string(at));
    }
    return value;
  }

  size_t pos() const { return pos_; }
  void Skip(size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

RasterMask ParsePgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    Fail(ErrorCode::kUnsupportedFormat, "expected a P2 or P5 graymap");
  }
  const bool raw = bytes[1] == '5';
  PgmScanner scan(bytes.substr(2));
  if (!bytes.substr(2).empty() && !std::isspace(static_cast<unsigned char>(bytes[2])) &&
      bytes[2] != '#') {
    Fail(ErrorCode::kUnsupportedFormat, "expected a P2 or P5 graymap");
  }
  const long width = scan.Number("width");
  const long height = scan.Number("height");
  const long maxval = scan.Number("maxval");
  if (width < 1 || height < 1) Fail(ErrorCode::kMalformedRecord, "image must be at least 1x1");
  if (maxval < 1 || maxval > 65535) {
    Fail(ErrorCode::kUnsupportedFormat, "maxval " + std::to_string(maxval) + " outside [1, 65535]");
  }
  if (width * height > (1L << 31)) Fail(ErrorCode::kMalformedRecord, "image too large");

  RasterMask mask(static_cast<int>(width), static_cast<int>(height));
  const size_t n = static_cast<size_t>(width * height);
  auto store = [&](size_t i, long value) {
    if (value > maxval) {
      Fail(ErrorCode::kMalformedRecord, "pixel " + std::to_string(i) + " exceeds maxval");
    }
    mask.pixels[i] = 2 * value >= maxval ? 1 : 0;
  };
  if (raw) {
    // Exactly one whitespace byte separates the header from the raster.
    const size_t start = 2 + scan.pos() + 1;
    const size_t bpp = maxval > 255 ? 2 : 1;
    if (start > bytes.size() || bytes.size() - start < n * bpp) {
      Fail(ErrorCode::kTruncatedFile, "raster needs " + std::to_string(n * bpp) + " bytes, file has " +
                                          std::to_string(start > bytes.size() ? 0 : bytes.size() - start));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + start;
    for (size_t i = 0; i < n; ++i) {
      const long v = bpp == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
      store(i, v);
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      const size_t at = scan.pos();
      const std::string_view tok = scan.Token();
      if (tok.empty()) {
        Fail(ErrorCode::kTruncatedFile, "expected " + std::to_string(n) + " pixels, found " +
                                            std::to_string(i) + " (byte " + std::to_string(at + 2) + ")");
      }
      long v = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v < 0) {
        Fail(ErrorCode::kMalformedRecord, "bad pixel value '" + std::string(tok) + "' at byte " +
                                              std::to_string(at + 2));
      }
      store(i, v);
    }
  }
  return mask;
}

std::string FormatPgm(const RasterMask& mask, bool binary) {
  std::string out = binary ? "P5\n" : "P2\n";
  out += std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (binary) {
        out += static_cast<char>(mask.at(c, r) ? 255 : 0);
      } else {
        if (c) out += ' ';
        out += mask.at(c, r) ? "255" : "0";
      }
    }
    if (!binary) out += '\n';
  }
  return out;
}

RasterMask ReadMask(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  try {
    return ParsePgm(bytes);
  } catch (const Error& e) {
    Fail(e.code(), path.string() + ": " + e.detail());
  }
}

void WriteMask(const std::filesystem::path& path, const RasterMask& mask, bool binary) {
  WriteFileAtomic(path, FormatPgm(mask, binary));
}

}  // namespace aggmorph
