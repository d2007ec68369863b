#pragma once

// PGM (P2/P5) reading and writing, bit-exact on write: the emitted header is
// always "magic\nwidth height\n255\n" followed by the payload. Parse failures
// report the byte offset they occurred at. Also the raw float dump used for
// level-set debugging (.raw + small text header).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace mshape {

struct GrayImage {
    RasterGrid grid;
    std::vector<std::uint16_t> values;  // up to maxval
    int maxval = 255;
};

namespace detail {

// Minimal PNM tokenizer that tracks the byte offset for error messages and
// skips '#' comments inside the header.
class PnmReader {
public:
    explicit PnmReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open '" + path + "' for reading");
        std::ostringstream ss;
        ss << in.rdbuf();
        data_ = ss.str();
    }

    std::size_t offset() const { return pos_; }
    const std::string& path() const { return path_; }

    void skip_header_space() {
        while (pos_ < data_.size()) {
            char c = data_[pos_];
            if (c == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string token() {
        skip_header_space();
        std::size_t start = pos_;
        while (pos_ < data_.size() && !isspace_or_hash(data_[pos_])) ++pos_;
        if (pos_ == start) throw parse_error(path_ + ": unexpected end of header", pos_);
        return data_.substr(start, pos_ - start);
    }

    long header_int(const char* what) {
        std::size_t at = pos_;
        std::string tok = token();
        at = pos_ - tok.size();
        long v = 0;
        for (char c : tok) {
            if (c < '0' || c > '9')
                throw parse_error(path_ + ": bad " + what + " '" + tok + "'", at);
            v = v * 10 + (c - '0');
            if (v > std::numeric_limits<int>::max())
                throw parse_error(path_ + ": " + what + " out of range", at);
        }
        return v;
    }

    // One byte of whitespace separates the maxval from a binary payload.
    void expect_single_space() {
        if (pos_ >= data_.size() || !is_space(data_[pos_]))
            throw parse_error(path_ + ": missing whitespace before payload", pos_);
        ++pos_;
    }

    const std::string& raw() const { return data_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    const char* payload() const { return data_.data() + pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
    static bool isspace_or_hash(char c) { return is_space(c) || c == '#'; }

    std::string path_;
    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline GrayImage load_pgm(const std::string& path) {
    detail::PnmReader r(path);
    std::string magic = r.token();
    if (magic != "P2" && magic != "P5")
        throw parse_error(path + ": not a PGM file (magic '" + magic + "')", 0);

    long w = r.header_int("width");
    long h = r.header_int("height");
    if (w < 1 || h < 1)
        throw parse_error(path + ": zero or negative image dimensions", r.offset());
    long maxval = r.header_int("maxval");
    if (maxval < 1 || maxval > 65535)
        throw parse_error(path + ": maxval out of range", r.offset());

    GrayImage img;
    img.grid = RasterGrid(static_cast<int>(w), static_cast<int>(h));
    img.maxval = static_cast<int>(maxval);
    img.values.resize(img.grid.size());

    if (magic == "P2") {
        for (std::size_t i = 0; i < img.values.size(); ++i) {
            long v = r.header_int("pixel value");
            if (v > maxval)
                throw parse_error(path + ": pixel value exceeds maxval", r.offset());
            img.values[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        r.expect_single_space();
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        const std::size_t need = img.grid.size() * bytes_per;
        if (r.remaining() < need)
            throw parse_error(path + ": truncated payload, need " + std::to_string(need) +
                                  " bytes, have " + std::to_string(r.remaining()),
                              r.offset());
        const unsigned char* p = reinterpret_cast<const unsigned char*>(r.payload());
        if (bytes_per == 1) {
            for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = p[i];
        } else {
            for (std::size_t i = 0; i < img.values.size(); ++i)
                img.values[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
        }
        r.advance(need);
    }
    return img;
}

// Threshold a PGM into a mask: foreground is bright (gray >= threshold);
// `invert` flips the rule for datasets that mark foreground dark.
inline BinaryMask load_mask(const std::string& path, int threshold = 128, bool invert = false) {
    GrayImage img = load_pgm(path);
    BinaryMask m(img.grid);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        bool fg = img.values[i] >= threshold;
        m.values[i] = (fg != invert) ? 1 : 0;
    }
    return m;
}

enum class PgmFormat { P5, P2 };

// Foreground = 255, background = 0; fixed header layout so writes are
// reproducible byte for byte.
inline void save_mask(const std::string& path, const BinaryMask& m, PgmFormat fmt = PgmFormat::P5) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    const char* magic = fmt == PgmFormat::P5 ? "P5" : "P2";
    out << magic << "\n" << m.grid.width << " " << m.grid.height << "\n255\n";
    if (fmt == PgmFormat::P5) {
        std::vector<unsigned char> row(m.grid.width);
        for (int y = 0; y < m.grid.height; ++y) {
            for (int x = 0; x < m.grid.width; ++x)
                row[x] = m.at(x, y) ? 255 : 0;
            out.write(reinterpret_cast<const char*>(row.data()), row.size());
        }
    } else {
        for (int y = 0; y < m.grid.height; ++y) {
            for (int x = 0; x < m.grid.width; ++x)
                out << (x ? " " : "") << (m.at(x, y) ? 255 : 0);
            out << "\n";
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

// Gray snapshot writer (contour overlays etc.); values clamped to [0,255].
inline void save_pgm(const std::string& path, const GrayImage& img, PgmFormat fmt = PgmFormat::P5) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << (fmt == PgmFormat::P5 ? "P5" : "P2") << "\n"
        << img.grid.width << " " << img.grid.height << "\n255\n";
    if (fmt == PgmFormat::P5) {
        std::vector<unsigned char> row(img.grid.width);
        for (int y = 0; y < img.grid.height; ++y) {
            for (int x = 0; x < img.grid.width; ++x) {
                std::uint16_t v = img.values[img.grid.index(x, y)];
                row[x] = static_cast<unsigned char>(v > 255 ? 255 : v);
            }
            out.write(reinterpret_cast<const char*>(row.data()), row.size());
        }
    } else {
        for (int y = 0; y < img.grid.height; ++y) {
            for (int x = 0; x < img.grid.width; ++x) {
                std::uint16_t v = img.values[img.grid.index(x, y)];
                out << (x ? " " : "") << (v > 255 ? 255 : v);
            }
            out << "\n";
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

// Debug dump: <base>.raw holds float32 row-major samples, <base>.hdr the
// dimensions and value range.
inline void save_field_raw(const std::string& base, const RasterGrid& grid,
                           const std::vector<double>& values) {
    if (values.size() != grid.size()) throw error("save_field_raw: size mismatch");
    double lo = values.empty() ? 0.0 : values[0], hi = lo;
    std::vector<float> f(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        f[i] = static_cast<float>(values[i]);
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }
    std::ofstream raw(base + ".raw", std::ios::binary);
    if (!raw) throw io_error("cannot open '" + base + ".raw' for writing");
    raw.write(reinterpret_cast<const char*>(f.data()), f.size() * sizeof(float));
    std::ofstream hdr(base + ".hdr");
    if (!hdr) throw io_error("cannot open '" + base + ".hdr' for writing");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "width %d\nheight %d\nmin %.9g\nmax %.9g\n",
                  grid.width, grid.height, lo, hi);
    hdr << buf;
}

}  // namespace mshape
