#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dasmr::io {

/// Versioned binary container for run state: a magic header followed by
/// typed, named records in writer order. Payloads are little-endian
/// (native on every supported target); tensors are 32-bit floats. Loading a
/// different version is a hard error; round-tripping a file is byte-exact
/// because writers emit records in a fixed order.
inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'S', 'M', 'R', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

enum class RecordType : std::uint8_t { text = 1, i64_list = 2, f64_list = 3, tensor_f32 = 4, blob = 5 };

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
    write_bytes(os, &v, sizeof(v));
}

inline void write_sized(std::ostream& os, const std::string& s) {
    write_pod<std::uint64_t>(os, s.size());
    write_bytes(os, s.data(), s.size());
}

inline void read_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("checkpoint: truncated stream");
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    read_bytes(is, &v, sizeof(v));
    return v;
}

inline std::string read_sized(std::istream& is) {
    const std::uint64_t n = read_pod<std::uint64_t>(is);
    std::string s(n, '\0');
    if (n) read_bytes(is, s.data(), n);
    return s;
}

}  // namespace ckpt_detail

class CheckpointWriter {
public:
    explicit CheckpointWriter(std::ostream& os) : os_(os) {
        ckpt_detail::write_bytes(os_, kCheckpointMagic, sizeof(kCheckpointMagic));
        ckpt_detail::write_pod<std::uint32_t>(os_, kCheckpointVersion);
    }

    void add_text(const std::string& name, const std::string& text) {
        header(ckpt_detail::RecordType::text, name);
        ckpt_detail::write_sized(os_, text);
    }

    void add_i64_list(const std::string& name, const std::vector<std::int64_t>& v) {
        header(ckpt_detail::RecordType::i64_list, name);
        ckpt_detail::write_pod<std::uint64_t>(os_, v.size());
        ckpt_detail::write_bytes(os_, v.data(), v.size() * sizeof(std::int64_t));
    }

    void add_f64_list(const std::string& name, const std::vector<double>& v) {
        header(ckpt_detail::RecordType::f64_list, name);
        ckpt_detail::write_pod<std::uint64_t>(os_, v.size());
        ckpt_detail::write_bytes(os_, v.data(), v.size() * sizeof(double));
    }

    void add_tensor_f32(const std::string& name, std::uint32_t rows, std::uint32_t cols,
                        const float* data) {
        header(ckpt_detail::RecordType::tensor_f32, name);
        ckpt_detail::write_pod(os_, rows);
        ckpt_detail::write_pod(os_, cols);
        ckpt_detail::write_bytes(os_, data, std::size_t(rows) * cols * sizeof(float));
    }

    void add_blob(const std::string& name, const std::string& bytes) {
        header(ckpt_detail::RecordType::blob, name);
        ckpt_detail::write_sized(os_, bytes);
    }

private:
    void header(ckpt_detail::RecordType t, const std::string& name) {
        ckpt_detail::write_pod<std::uint8_t>(os_, static_cast<std::uint8_t>(t));
        ckpt_detail::write_sized(os_, name);
    }

    std::ostream& os_;
};

class CheckpointReader {
public:
    struct TensorF32 {
        std::uint32_t rows = 0, cols = 0;
        std::vector<float> data;
    };

    explicit CheckpointReader(std::istream& is) {
        char magic[8];
        ckpt_detail::read_bytes(is, magic, sizeof(magic));
        if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
            throw std::runtime_error("checkpoint: bad magic bytes");
        const auto version = ckpt_detail::read_pod<std::uint32_t>(is);
        if (version != kCheckpointVersion)
            throw std::runtime_error("checkpoint: version " + std::to_string(version) +
                                     " unsupported (expected " +
                                     std::to_string(kCheckpointVersion) + ")");
        while (true) {
            int peek = is.peek();
            if (peek == std::char_traits<char>::eof()) break;
            const auto type =
                static_cast<ckpt_detail::RecordType>(ckpt_detail::read_pod<std::uint8_t>(is));
            const std::string name = ckpt_detail::read_sized(is);
            names_.push_back(name);
            switch (type) {
                case ckpt_detail::RecordType::text:
                    texts_[name] = ckpt_detail::read_sized(is);
                    break;
                case ckpt_detail::RecordType::blob:
                    blobs_[name] = ckpt_detail::read_sized(is);
                    break;
                case ckpt_detail::RecordType::i64_list: {
                    const auto n = ckpt_detail::read_pod<std::uint64_t>(is);
                    std::vector<std::int64_t> v(n);
                    if (n) ckpt_detail::read_bytes(is, v.data(), n * sizeof(std::int64_t));
                    i64s_[name] = std::move(v);
                    break;
                }
                case ckpt_detail::RecordType::f64_list: {
                    const auto n = ckpt_detail::read_pod<std::uint64_t>(is);
                    std::vector<double> v(n);
                    if (n) ckpt_detail::read_bytes(is, v.data(), n * sizeof(double));
                    f64s_[name] = std::move(v);
                    break;
                }
                case ckpt_detail::RecordType::tensor_f32: {
                    TensorF32 t;
                    t.rows = ckpt_detail::read_pod<std::uint32_t>(is);
                    t.cols = ckpt_detail::read_pod<std::uint32_t>(is);
                    t.data.resize(std::size_t(t.rows) * t.cols);
                    if (!t.data.empty())
                        ckpt_detail::read_bytes(is, t.data.data(), t.data.size() * sizeof(float));
                    tensors_[name] = std::move(t);
                    break;
                }
                default:
                    throw std::runtime_error("checkpoint: unknown record type");
            }
        }
    }

    const std::vector<std::string>& names() const { return names_; }

    const std::string& text(const std::string& name) const { return find(texts_, name); }
    const std::string& blob(const std::string& name) const { return find(blobs_, name); }
    const std::vector<std::int64_t>& i64_list(const std::string& name) const {
        return find(i64s_, name);
    }
    const std::vector<double>& f64_list(const std::string& name) const {
        return find(f64s_, name);
    }
    const TensorF32& tensor_f32(const std::string& name) const { return find(tensors_, name); }
    bool has_tensor(const std::string& name) const { return tensors_.count(name) > 0; }

private:
    template <typename M>
    static const typename M::mapped_type& find(const M& m, const std::string& name) {
        auto it = m.find(name);
        if (it == m.end()) throw std::runtime_error("checkpoint: missing record '" + name + "'");
        return it->second;
    }

    std::vector<std::string> names_;
    std::map<std::string, std::string> texts_;
    std::map<std::string, std::string> blobs_;
    std::map<std::string, std::vector<std::int64_t>> i64s_;
    std::map<std::string, std::vector<double>> f64s_;
    std::map<std::string, TensorF32> tensors_;
};

}  // namespace dasmr::io
