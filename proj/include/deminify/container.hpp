#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deminify/error.hpp"
#include "deminify/nn.hpp"

namespace deminify {

/// Weight container:
///
///     #nnmodel v1
///     key=value            (zero or more)
///     tensor <name> <rows> <cols>
///     <rows*cols little-endian float32, row-major>
///     blob <name> <nbytes>
///     <nbytes raw bytes>
///
/// Records are written in insertion order and read back in file order, so
/// serialize(parse(bytes)) == bytes.
struct Container {
    struct Tensor {
        std::string name;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<float> values; // row-major
    };
    struct Blob {
        std::string name;
        std::string bytes;
    };

    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<Tensor> tensors;
    std::vector<Blob> blobs;

    void set(std::string key, std::string value) {
        if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
            throw DataError("invalid container key/value: " + key);
        for (auto& kv : meta)
            if (kv.first == key) {
                kv.second = std::move(value);
                return;
            }
        meta.emplace_back(std::move(key), std::move(value));
    }

    std::optional<std::string> get(std::string_view key) const {
        for (const auto& kv : meta)
            if (kv.first == key) return kv.second;
        return std::nullopt;
    }

    const std::string& require(std::string_view key) const {
        for (const auto& kv : meta)
            if (kv.first == key) return kv.second;
        throw ModelMismatch("model file lacks key '" + std::string(key) + "'");
    }

    const Tensor* find_tensor(std::string_view name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }

    const Blob* find_blob(std::string_view name) const {
        for (const auto& b : blobs)
            if (b.name == name) return &b;
        return nullptr;
    }

    /// Stores parameters as float32.
    void add_tensors(std::span<const nn::TensorRef> refs) {
        for (const auto& r : refs) {
            Tensor t{r.name, static_cast<std::size_t>(r.rows), static_cast<std::size_t>(r.cols), {}};
            t.values.reserve(t.rows * t.cols);
            for (Eigen::Index i = 0; i < r.rows; ++i)
                for (Eigen::Index j = 0; j < r.cols; ++j) t.values.push_back(static_cast<float>(r.data[j * r.rows + i]));
            tensors.push_back(std::move(t));
        }
    }

    /// Fills parameters from stored tensors; names and shapes must match.
    void load_tensors(std::span<const nn::TensorRef> refs) const {
        for (const auto& r : refs) {
            const Tensor* t = find_tensor(r.name);
            if (!t) throw ModelMismatch("model file lacks tensor '" + r.name + "'");
            if (t->rows != static_cast<std::size_t>(r.rows) || t->cols != static_cast<std::size_t>(r.cols))
                throw ModelMismatch("tensor '" + r.name + "' is " + std::to_string(t->rows) + "x" +
                                    std::to_string(t->cols) + ", expected " + std::to_string(r.rows) + "x" +
                                    std::to_string(r.cols));
            for (Eigen::Index i = 0; i < r.rows; ++i)
                for (Eigen::Index j = 0; j < r.cols; ++j)
                    r.data[j * r.rows + i] = static_cast<double>(t->values[static_cast<std::size_t>(i * r.cols + j)]);
        }
    }

    void write(std::ostream& os) const {
        os << "#nnmodel v1\n";
        for (const auto& [k, v] : meta) os << k << '=' << v << '\n';
        for (const auto& t : tensors) {
            os << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
            for (float f : t.values) {
                std::uint32_t bits;
                std::memcpy(&bits, &f, sizeof bits);
                char le[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                              static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
                os.write(le, 4);
            }
        }
        for (const auto& b : blobs) {
            os << "blob " << b.name << ' ' << b.bytes.size() << '\n';
            os.write(b.bytes.data(), static_cast<std::streamsize>(b.bytes.size()));
        }
    }

    std::string serialize() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    static Container read(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "#nnmodel v1") throw ModelMismatch("not an #nnmodel v1 file");
        Container c;
        bool in_meta = true;
        while (std::getline(is, line)) {
            if (line.rfind("tensor ", 0) == 0) {
                in_meta = false;
                std::istringstream hs(line.substr(7));
                Tensor t;
                if (!(hs >> t.name >> t.rows >> t.cols) || !(hs >> std::ws).eof())
                    throw ModelMismatch("bad tensor header: " + line);
                const std::size_t n = t.rows * t.cols;
                std::string raw(n * 4, '\0');
                if (!is.read(raw.data(), static_cast<std::streamsize>(raw.size())))
                    throw ModelMismatch("truncated tensor '" + t.name + "'");
                t.values.resize(n);
                for (std::size_t k = 0; k < n; ++k) {
                    const auto* p = reinterpret_cast<const unsigned char*>(raw.data() + 4 * k);
                    std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
                                         std::uint32_t(p[3]) << 24;
                    std::memcpy(&t.values[k], &bits, sizeof bits);
                }
                c.tensors.push_back(std::move(t));
            } else if (line.rfind("blob ", 0) == 0) {
                in_meta = false;
                std::istringstream hs(line.substr(5));
                Blob b;
                std::size_t n = 0;
                if (!(hs >> b.name >> n) || !(hs >> std::ws).eof()) throw ModelMismatch("bad blob header: " + line);
                b.bytes.assign(n, '\0');
                if (n && !is.read(b.bytes.data(), static_cast<std::streamsize>(n)))
                    throw ModelMismatch("truncated blob '" + b.name + "'");
                c.blobs.push_back(std::move(b));
            } else if (in_meta) {
                auto eq = line.find('=');
                if (eq == std::string::npos || eq == 0) throw ModelMismatch("bad header line: " + line);
                c.meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
            } else {
                throw ModelMismatch("unexpected record: " + line);
            }
        }
        return c;
    }

    static Container parse(const std::string& bytes) {
        std::istringstream is(bytes);
        return read(is);
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write " + path);
        write(os);
        if (!os.flush()) throw IoError("write failed: " + path);
    }

    static Container load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot read " + path);
        return read(is);
    }
};

} // namespace deminify
