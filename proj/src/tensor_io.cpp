// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fusionedit/tensor_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fusionedit/errors.hpp"

static_assert(std::endian::native == std::endian::little, "NPY '<f4' I/O assumes a little-endian host");

namespace fusionedit {
namespace {

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

struct NpyHeader {
    std::vector<std::size_t> shape;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Finds the value text following 'key': in a python dict literal.
std::optional<std::string_view> dict_value(std::string_view dict, std::string_view key) {
    for (char quote : {'\'', '"'}) {
        std::string needle = std::string(1, quote) + std::string(key) + std::string(1, quote);
        auto pos = dict.find(needle);
        if (pos == std::string_view::npos) continue;
        pos = dict.find(':', pos + needle.size());
        if (pos == std::string_view::npos) return std::nullopt;
        auto rest = trim(dict.substr(pos + 1));
        std::size_t end = 0;
        if (!rest.empty() && rest.front() == '(') {
            end = rest.find(')');
            if (end == std::string_view::npos) return std::nullopt;
            return rest.substr(0, end + 1);
        }
        if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
            end = rest.find(rest.front(), 1);
            if (end == std::string_view::npos) return std::nullopt;
            return rest.substr(0, end + 1);
        }
        end = rest.find_first_of(",}");
        return trim(rest.substr(0, end));
    }
    return std::nullopt;
}

NpyHeader parse_header(std::string_view dict, const std::filesystem::path& path) {
    const auto where = " in " + path.string();
    dict = trim(dict);
    if (dict.empty() || dict.front() != '{' || dict.back() != '}') {
        throw FormatError("NPY header is not a dict literal" + where);
    }
    auto descr = dict_value(dict, "descr");
    auto fortran = dict_value(dict, "fortran_order");
    auto shape = dict_value(dict, "shape");
    if (!descr || !fortran || !shape) {
        throw FormatError("NPY header is missing descr, fortran_order or shape" + where);
    }
    if (*descr != "'<f4'" && *descr != "\"<f4\"") {
        throw FormatError("unsupported NPY dtype " + std::string(*descr) + ", expected '<f4'" + where);
    }
    if (*fortran != "False") {
        throw FormatError("Fortran-ordered NPY arrays are not supported" + where);
    }

    NpyHeader header;
    auto inner = shape->substr(1, shape->size() - 2);
    while (!inner.empty()) {
        auto comma = inner.find(',');
        auto item = trim(inner.substr(0, comma));
        if (!item.empty()) {
            std::size_t value = 0;
            for (char ch : item) {
                if (!std::isdigit(static_cast<unsigned char>(ch))) {
                    throw FormatError("malformed NPY shape " + std::string(*shape) + where);
                }
                value = value * 10 + static_cast<std::size_t>(ch - '0');
            }
            header.shape.push_back(value);
        }
        if (comma == std::string_view::npos) break;
        inner.remove_prefix(comma + 1);
    }
    return header;
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

struct RawArray {
    std::vector<std::size_t> shape;
    std::vector<float> values;
};

RawArray read_npy(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 10 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw FormatError("missing NPY magic in " + path.string());
    }
    const auto major = static_cast<unsigned char>(bytes[6]);
    std::size_t header_len = 0;
    std::size_t offset = 0;
    if (major == 1) {
        header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
        offset = 10;
    } else if (major == 2 && bytes.size() >= 12) {
        for (int i = 0; i < 4; ++i) {
            header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
        }
        offset = 12;
    } else {
        throw FormatError("unsupported NPY version " + std::to_string(major) + " in " + path.string());
    }
    if (offset + header_len > bytes.size()) {
        throw FormatError("truncated NPY header in " + path.string());
    }

    RawArray array;
    array.shape = parse_header(std::string_view(bytes.data() + offset, header_len), path).shape;
    if (array.shape.size() != 2 && array.shape.size() != 3) {
        throw ShapeError("expected a rank-2 or rank-3 array, got rank " + std::to_string(array.shape.size()) +
                         " in " + path.string());
    }
    std::size_t count = 1;
    for (auto d : array.shape) count *= d;
    if (count == 0) throw ShapeError("zero-sized array in " + path.string());

    const std::size_t payload = bytes.size() - offset - header_len;
    if (payload != count * sizeof(float)) {
        throw FormatError("NPY payload is " + std::to_string(payload) + " bytes, expected " +
                          std::to_string(count * sizeof(float)) + " in " + path.string());
    }
    array.values.resize(count);
    std::memcpy(array.values.data(), bytes.data() + offset + header_len, count * sizeof(float));
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(array.values[i])) {
            throw DataError("non-finite value at flat index " + std::to_string(i) + " in " + path.string());
        }
    }
    return array;
}

void write_npy(std::span<const std::size_t> shape, std::span<const float> values, const std::filesystem::path& path) {
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) dict += ", ";
        dict += std::to_string(shape[i]);
    }
    dict += "), }";
    // Preamble (10 bytes) + header is padded to a multiple of 64 and ends in '\n'.
    std::size_t total = 10 + dict.size() + 1;
    std::size_t padded = (total + 63) / 64 * 64;
    dict.append(padded - total, ' ');
    dict.push_back('\n');

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    const char version[2] = {1, 0};
    out.write(version, 2);
    const auto len = static_cast<std::uint16_t>(dict.size());
    const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_bytes, 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<float> narrow(std::span<const double> values) {
    std::vector<float> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

std::uint8_t to_byte(double weight) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(weight, 0.0, 1.0) * 255.0));
}

}  // namespace

LatentTensor read_tensor(const std::filesystem::path& path) {
    auto array = read_npy(path);
    if (array.shape.size() == 2) {
        return LatentTensor(1, array.shape[0], array.shape[1], std::move(array.values));
    }
    return LatentTensor(array.shape[0], array.shape[1], array.shape[2], std::move(array.values));
}

void write_tensor(const LatentTensor& t, const std::filesystem::path& path) {
    const std::array<std::size_t, 3> shape = {t.channels(), t.height(), t.width()};
    write_npy(shape, t.data(), path);
}

ScalarMap read_scalar_map(const std::filesystem::path& path) {
    auto array = read_npy(path);
    if (array.shape.size() == 3 && array.shape[0] != 1) {
        throw ShapeError("expected a single-channel map in " + path.string());
    }
    const auto h = array.shape[array.shape.size() - 2];
    const auto w = array.shape[array.shape.size() - 1];
    ScalarMap map(h, w);
    std::copy(array.values.begin(), array.values.end(), map.data.begin());
    if (std::any_of(map.data.begin(), map.data.end(), [](double v) { return v < 0.0; })) {
        throw DataError("map contains negative values in " + path.string());
    }
    return map;
}

void write_scalar_map(const ScalarMap& m, const std::filesystem::path& path) {
    const std::array<std::size_t, 2> shape = {m.height, m.width};
    write_npy(shape, narrow(m.data), path);
}

void write_mask(const BinaryMask& m, const std::filesystem::path& path) {
    const std::array<std::size_t, 2> shape = {m.height, m.width};
    std::vector<float> values(m.bits.begin(), m.bits.end());
    write_npy(shape, values, path);
}

void write_mask(const SoftMask& m, const std::filesystem::path& path) {
    const std::array<std::size_t, 2> shape = {m.height, m.width};
    write_npy(shape, narrow(m.weights), path);
}

SoftMask read_soft_mask(const std::filesystem::path& path) {
    auto map = read_scalar_map(path);
    if (std::any_of(map.data.begin(), map.data.end(), [](double v) { return v > 1.0; })) {
        throw DataError("mask weights exceed 1 in " + path.string());
    }
    SoftMask mask(map.height, map.width);
    mask.weights = std::move(map.data);
    return mask;
}

void export_mask_image(const SoftMask& m, const std::filesystem::path& path) {
    std::vector<std::uint8_t> pixels(m.weights.size());
    std::transform(m.weights.begin(), m.weights.end(), pixels.begin(), to_byte);
    write_gray_png(pixels, m.height, m.width, path);
}

void export_heat_image(const ScalarMap& m, const std::filesystem::path& path) {
    const double peak = m.data.empty() ? 0.0 : *std::max_element(m.data.begin(), m.data.end());
    std::vector<std::uint8_t> pixels(m.data.size(), 0);
    if (peak > 0.0) {
        std::transform(m.data.begin(), m.data.end(), pixels.begin(), [peak](double v) { return to_byte(v / peak); });
    }
    write_gray_png(pixels, m.height, m.width, path);
}

void write_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                    const std::filesystem::path& path) {
    if (pixels.size() != height * width) throw ShapeError("PNG pixel buffer does not match dimensions");

    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(pixels.data() + y * width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace fusionedit
