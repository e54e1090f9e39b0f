#include "bsmm/bsm_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "bsmm/errors.hpp"

namespace bsmm {
namespace {

constexpr char kMagic[4] = {'B', 'S', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
    }
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
    }
}

void put_f64(std::vector<std::byte>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint32_t take_u32(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(std::to_integer<unsigned>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t take_u64(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    double take_f64(const char* what) { return std::bit_cast<double>(take_u64(what)); }

    /// Guards array reads against absurd counts from corrupt headers before
    /// any allocation happens.
    void expect_array(std::uint64_t count, std::size_t elem_width, const char* what) {
        if (count > remaining() / elem_width) {
            throw FormatError(std::string("truncated stream: ") + what, pos_);
        }
    }

private:
    void require(std::size_t n, const char* what) {
        if (remaining() < n) {
            throw FormatError(std::string("truncated stream: ") + what, pos_);
        }
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

void encode_body(const BlockCsr& m, std::vector<std::byte>& out) {
    const BlockLayout& layout = m.layout();
    put_u64(out, layout.n_row_blocks());
    put_u64(out, layout.n_col_blocks());
    put_u64(out, m.n_blocks());
    for (std::size_t r = 0; r < layout.n_row_blocks(); ++r) {
        put_u32(out, static_cast<std::uint32_t>(layout.row_size(r)));
    }
    for (std::size_t c = 0; c < layout.n_col_blocks(); ++c) {
        put_u32(out, static_cast<std::uint32_t>(layout.col_size(c)));
    }
    for (std::size_t p : m.row_ptr()) {
        put_u64(out, p);
    }
    for (std::size_t c : m.col_idx()) {
        put_u64(out, c);
    }
    for (double v : m.block_data()) {
        put_f64(out, v);
    }
}

BlockCsr decode_body(ByteReader& r) {
    const std::uint64_t n_row_blocks = r.take_u64("block row count");
    const std::uint64_t n_col_blocks = r.take_u64("block column count");
    const std::uint64_t n_blocks = r.take_u64("stored block count");

    r.expect_array(n_row_blocks, 4, "row block sizes");
    std::vector<std::size_t> row_sizes(n_row_blocks);
    for (std::uint64_t i = 0; i < n_row_blocks; ++i) {
        const std::size_t at = r.offset();
        row_sizes[i] = r.take_u32("row block size");
        if (row_sizes[i] == 0) {
            throw FormatError("row block size is zero", at);
        }
    }
    r.expect_array(n_col_blocks, 4, "column block sizes");
    std::vector<std::size_t> col_sizes(n_col_blocks);
    for (std::uint64_t i = 0; i < n_col_blocks; ++i) {
        const std::size_t at = r.offset();
        col_sizes[i] = r.take_u32("column block size");
        if (col_sizes[i] == 0) {
            throw FormatError("column block size is zero", at);
        }
    }

    r.expect_array(n_row_blocks + 1, 8, "row pointer array");
    std::vector<std::uint64_t> row_ptr(n_row_blocks + 1);
    for (std::uint64_t i = 0; i <= n_row_blocks; ++i) {
        const std::size_t at = r.offset();
        row_ptr[i] = r.take_u64("row pointer");
        if (i == 0 && row_ptr[0] != 0) {
            throw FormatError("row pointer array does not start at zero", at);
        }
        if (i > 0 && row_ptr[i] < row_ptr[i - 1]) {
            throw FormatError("row pointer array not monotone", at);
        }
    }
    if (row_ptr[n_row_blocks] != n_blocks) {
        throw FormatError("row pointer end disagrees with stored block count",
                          r.offset() - 8);
    }

    r.expect_array(n_blocks, 8, "column index array");
    std::vector<std::uint64_t> col_idx(n_blocks);
    {
        std::uint64_t row = 0;
        for (std::uint64_t i = 0; i < n_blocks; ++i) {
            const std::size_t at = r.offset();
            col_idx[i] = r.take_u64("column index");
            if (col_idx[i] >= n_col_blocks) {
                throw FormatError("column index out of range", at);
            }
            while (row_ptr[row + 1] <= i) ++row;
            if (i > row_ptr[row] && col_idx[i] <= col_idx[i - 1]) {
                throw FormatError("column indices not strictly increasing within a row", at);
            }
        }
    }

    BlockLayout layout(row_sizes, col_sizes);
    BlockCsrBuilder builder(layout);
    std::vector<double> values;
    for (std::uint64_t row = 0; row < n_row_blocks; ++row) {
        for (std::uint64_t i = row_ptr[row]; i < row_ptr[row + 1]; ++i) {
            const std::size_t elems = layout.row_size(row) * layout.col_size(col_idx[i]);
            r.expect_array(elems, 8, "block element data");
            values.resize(elems);
            for (std::size_t e = 0; e < elems; ++e) {
                values[e] = r.take_f64("block element");
            }
            builder.append(row, col_idx[i], values);
        }
    }
    return builder.finish();
}

std::vector<std::byte> read_all(std::istream& in) {
    std::vector<std::byte> bytes;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        if (got <= 0) break;
        const std::size_t old = bytes.size();
        bytes.resize(old + static_cast<std::size_t>(got));
        std::memcpy(bytes.data() + old, buf, static_cast<std::size_t>(got));
    }
    if (in.bad()) {
        throw Error("read failed");
    }
    return bytes;
}

}  // namespace

void write_bsm(const BlockCsr& m, std::ostream& out) {
    std::vector<std::byte> bytes;
    bytes.reserve(8 + 24 + m.block_data().size() * 8);
    for (char c : kMagic) bytes.push_back(static_cast<std::byte>(c));
    put_u32(bytes, kVersion);
    encode_body(m, bytes);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed");
    }
}

void write_bsm(const BlockCsr& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_bsm(m, out);
    out.flush();
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

BlockCsr read_bsm(std::istream& in) {
    const std::vector<std::byte> bytes = read_all(in);
    ByteReader r(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("bad magic", 0);
    }
    std::uint32_t magic_skip [[maybe_unused]] = r.take_u32("magic");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.take_u32("version");
    if (version != kVersion) {
        throw FormatError("unsupported version " + std::to_string(version), version_at);
    }
    BlockCsr m = decode_body(r);
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after matrix data", r.offset());
    }
    return m;
}

BlockCsr read_bsm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string() + " for reading");
    }
    return read_bsm(in);
}

std::vector<std::byte> serialize_body(const BlockCsr& m) {
    std::vector<std::byte> bytes;
    bytes.reserve(24 + m.block_data().size() * 8);
    encode_body(m, bytes);
    return bytes;
}

BlockCsr parse_body(std::span<const std::byte> bytes) {
    ByteReader r(bytes);
    BlockCsr m = decode_body(r);
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after matrix data", r.offset());
    }
    return m;
}

}  // namespace bsmm
