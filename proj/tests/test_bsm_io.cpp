#include "bsmm/bsm_io.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <vector>

#include "bsmm/errors.hpp"
#include "oracles.hpp"

namespace {

using bsmm::BlockCsr;
using bsmm::BlockLayout;
using bsmm::Triplet;

std::string encode(const BlockCsr& m) {
    std::ostringstream out(std::ios::binary);
    bsmm::write_bsm(m, out);
    return out.str();
}

BlockCsr decode(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return bsmm::read_bsm(in);
}

BlockCsr tiny_matrix() {
    const BlockLayout layout({2, 1}, {1, 2});
    std::vector<Triplet> ts;
    ts.push_back({0, 0, {1.5, -2.5}});
    ts.push_back({0, 1, {0.25, 0.5, 0.75, 1.0}});
    ts.push_back({1, 1, {-1.0, 4.0}});
    return BlockCsr::build_from_triplets(layout, ts);
}

TEST(BsmRoundTrip, StreamPreservesEverything) {
    const std::size_t sizes[] = {1, 5, 6, 13, 23};
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const BlockCsr m = oracle::random_matrix(8, 11, sizes, 0.35, seed);
        const BlockCsr back = decode(encode(m));
        EXPECT_TRUE(back.bit_identical(m)) << "seed " << seed;
    }
}

TEST(BsmRoundTrip, FilePath) {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "bsmm_io_roundtrip.bsm";
    const std::size_t sizes[] = {5, 13};
    const BlockCsr m = oracle::random_matrix(6, 6, sizes, 0.5, 77);
    bsmm::write_bsm(m, path);
    const BlockCsr back = bsmm::read_bsm(path);
    std::filesystem::remove(path);
    EXPECT_TRUE(back.bit_identical(m));
}

TEST(BsmRoundTrip, EmptyMatrix) {
    const BlockCsr m = BlockCsr::build_from_triplets(BlockLayout({3, 2}, {4}), {});
    const BlockCsr back = decode(encode(m));
    EXPECT_TRUE(back.bit_identical(m));
    EXPECT_EQ(back.n_blocks(), 0u);
}

TEST(BsmLayout, HeaderBytesAreLittleEndian) {
    const std::string bytes = encode(tiny_matrix());
    ASSERT_GE(bytes.size(), 32u);
    EXPECT_EQ(bytes.substr(0, 4), "BSM1");
    // u32 version = 1
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0);
    // u64 n_row_blocks = 2 at offset 8
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
    EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 0);
    // u64 n_col_blocks = 2 at offset 16, u64 n_blocks = 3 at offset 24
    EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 2);
    EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 3);

    // Exact size: 8 header + 24 counts + 4*4 sizes + 3*8 row_ptr + 3*8
    // col_idx + 8*8 doubles.
    EXPECT_EQ(bytes.size(), 8u + 24u + 16u + 24u + 24u + 64u);
}

TEST(BsmLayout, BodyIsFileMinusHeader) {
    const BlockCsr m = tiny_matrix();
    const std::string file_bytes = encode(m);
    const std::vector<std::byte> body = bsmm::serialize_body(m);
    ASSERT_EQ(body.size(), file_bytes.size() - 8);
    EXPECT_EQ(std::memcmp(body.data(), file_bytes.data() + 8, body.size()), 0);
    const BlockCsr back = bsmm::parse_body(body);
    EXPECT_TRUE(back.bit_identical(m));
}

TEST(BsmErrors, BadMagic) {
    std::string bytes = encode(tiny_matrix());
    bytes[0] = 'X';
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
    try {
        decode(bytes);
    } catch (const bsmm::FormatError& e) {
        EXPECT_EQ(e.byte_offset(), 0u);
    }
}

TEST(BsmErrors, BadVersion) {
    std::string bytes = encode(tiny_matrix());
    bytes[4] = 2;
    try {
        decode(bytes);
        FAIL() << "expected FormatError";
    } catch (const bsmm::FormatError& e) {
        EXPECT_EQ(e.byte_offset(), 4u);
    }
}

TEST(BsmErrors, TruncationAtEveryBoundary) {
    const std::string bytes = encode(tiny_matrix());
    // Every proper prefix must fail loudly, never return a matrix.
    for (std::size_t len : {0u, 3u, 7u, 11u, 31u, 33u, 55u, 71u}) {
        ASSERT_LT(len, bytes.size());
        EXPECT_THROW(decode(bytes.substr(0, len)), bsmm::FormatError) << "prefix " << len;
    }
    EXPECT_THROW(decode(bytes.substr(0, bytes.size() - 1)), bsmm::FormatError);
}

TEST(BsmErrors, TruncationOffsetIsWhereDataRanOut) {
    const std::string bytes = encode(tiny_matrix());
    try {
        decode(bytes.substr(0, 20));
        FAIL() << "expected FormatError";
    } catch (const bsmm::FormatError& e) {
        // Reading the u64 at offset 16 fails.
        EXPECT_EQ(e.byte_offset(), 16u);
    }
}

TEST(BsmErrors, TrailingBytesRejected) {
    std::string bytes = encode(tiny_matrix());
    bytes.push_back('\0');
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmErrors, ZeroBlockSizeRejected) {
    std::string bytes = encode(tiny_matrix());
    // First row block size: u32 at offset 32.
    bytes[32] = 0;
    bytes[33] = 0;
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmErrors, NonMonotoneRowPtrRejected) {
    std::string bytes = encode(tiny_matrix());
    // row_ptr[1] at offset 48 + 8: set to 200 > n_blocks.
    bytes[56] = static_cast<char>(200);
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmErrors, ColumnOutOfRangeRejected) {
    std::string bytes = encode(tiny_matrix());
    // col_idx[0] at offset 72: column 9 does not exist.
    bytes[72] = 9;
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmErrors, DuplicateColumnRejected) {
    std::string bytes = encode(tiny_matrix());
    // col_idx[1] at offset 80: make it equal to col_idx[0] = 0.
    bytes[80] = 0;
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmErrors, OversizedCountRejectedBeforeAllocation) {
    // Header claiming 2^60 row blocks in a 40-byte stream must raise
    // FormatError, not attempt a huge allocation.
    std::string bytes = encode(tiny_matrix()).substr(0, 40);
    bytes[8] = 0;
    bytes[15] = 0x10;  // n_row_blocks = 2^60
    EXPECT_THROW(decode(bytes), bsmm::FormatError);
}

TEST(BsmNorms, RecomputedOnLoad) {
    const BlockCsr m = tiny_matrix();
    const BlockCsr back = decode(encode(m));
    ASSERT_EQ(back.n_blocks(), m.n_blocks());
    for (std::size_t b = 0; b < m.n_blocks(); ++b) {
        EXPECT_EQ(back.norms()[b], m.norms()[b]);
    }
    ASSERT_NO_THROW(back.validate());
}

}  // namespace
