#include "bsmm/block_csr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bsmm/errors.hpp"
#include "oracles.hpp"

namespace {

using bsmm::BlockCsr;
using bsmm::BlockCsrBuilder;
using bsmm::BlockLayout;
using bsmm::Triplet;

TEST(BlockLayout, OffsetsArePrefixSums) {
    const BlockLayout layout({2, 3, 1}, {4, 2});
    EXPECT_EQ(layout.n_row_blocks(), 3u);
    EXPECT_EQ(layout.n_col_blocks(), 2u);
    EXPECT_EQ(layout.row_offset(0), 0u);
    EXPECT_EQ(layout.row_offset(1), 2u);
    EXPECT_EQ(layout.row_offset(2), 5u);
    EXPECT_EQ(layout.row_offset(3), 6u);
    EXPECT_EQ(layout.total_rows(), 6u);
    EXPECT_EQ(layout.total_cols(), 6u);
}

TEST(BlockLayout, ZeroSizeRejected) {
    EXPECT_THROW(BlockLayout({2, 0}, {1}), bsmm::ParameterError);
    EXPECT_THROW(BlockLayout({2}, {0}), bsmm::ParameterError);
}

TEST(FrobeniusNorm, MatchesDirectSum) {
    const std::vector<double> v = {3.0, -4.0};
    EXPECT_DOUBLE_EQ(bsmm::frobenius_norm(v), 5.0);
    EXPECT_DOUBLE_EQ(bsmm::frobenius_norm(std::vector<double>{}), 0.0);
    EXPECT_DOUBLE_EQ(bsmm::frobenius_norm(std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(BuildFromTriplets, MatchesScatterOracle) {
    const std::size_t sizes[] = {1, 5, 6, 13, 23};
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const BlockLayout layout = oracle::random_layout(7, 9, sizes, seed);
        const auto triplets = oracle::random_triplets(layout, 0.4, seed);
        const BlockCsr m = BlockCsr::build_from_triplets(layout, triplets);
        ASSERT_NO_THROW(m.validate());
        const bsmm::DenseMatrix want = oracle::scatter_add(layout, triplets);
        EXPECT_TRUE(oracle::matrices_close(m.to_dense(), want, 0.0)) << "seed " << seed;
    }
}

TEST(BuildFromTriplets, DuplicatesSumInEntryOrder) {
    const BlockLayout layout({2}, {2});
    std::vector<Triplet> ts;
    ts.push_back({0, 0, {1.0, 2.0, 3.0, 4.0}});
    ts.push_back({0, 0, {10.0, 20.0, 30.0, 40.0}});
    const BlockCsr m = BlockCsr::build_from_triplets(layout, ts);
    EXPECT_EQ(m.n_blocks(), 1u);
    const auto blk = m.block(0);
    EXPECT_DOUBLE_EQ(blk[0], 11.0);
    EXPECT_DOUBLE_EQ(blk[3], 44.0);
}

TEST(BuildFromTriplets, WrongValueCountRejected) {
    const BlockLayout layout({2}, {3});
    std::vector<Triplet> ts;
    ts.push_back({0, 0, {1.0, 2.0}});  // needs 6 values
    EXPECT_THROW(BlockCsr::build_from_triplets(layout, ts), bsmm::ParameterError);
}

TEST(BuildFromTriplets, OutOfRangeCoordinateRejected) {
    const BlockLayout layout({2}, {2});
    std::vector<Triplet> ts;
    ts.push_back({1, 0, std::vector<double>(4, 1.0)});
    EXPECT_THROW(BlockCsr::build_from_triplets(layout, ts), bsmm::ParameterError);
}

TEST(BlockCsr, CsrInvariantsHold) {
    const std::size_t sizes[] = {1, 5, 6};
    const BlockCsr m = oracle::random_matrix(12, 10, sizes, 0.3, 99);
    const auto& rp = m.row_ptr();
    ASSERT_EQ(rp.size(), m.layout().n_row_blocks() + 1);
    EXPECT_EQ(rp.front(), 0u);
    EXPECT_EQ(rp.back(), m.n_blocks());
    for (std::size_t r = 0; r < m.layout().n_row_blocks(); ++r) {
        EXPECT_LE(rp[r], rp[r + 1]);
        for (std::size_t b = rp[r] + 1; b < rp[r + 1]; ++b) {
            EXPECT_LT(m.col_idx()[b - 1], m.col_idx()[b]);
        }
    }
}

TEST(BlockCsr, NormsMatchBlockContent) {
    const std::size_t sizes[] = {5, 13};
    const BlockCsr m = oracle::random_matrix(6, 6, sizes, 0.5, 7);
    ASSERT_GT(m.n_blocks(), 0u);
    for (std::size_t b = 0; b < m.n_blocks(); ++b) {
        const auto blk = m.block(b);
        double sum = 0.0;
        for (double v : blk) sum += v * v;
        EXPECT_DOUBLE_EQ(m.norms()[b], std::sqrt(sum));
    }
}

TEST(BlockCsr, FindBlock) {
    const BlockLayout layout({2, 2}, {2, 2});
    std::vector<Triplet> ts;
    ts.push_back({0, 1, std::vector<double>(4, 1.0)});
    ts.push_back({1, 0, std::vector<double>(4, 2.0)});
    const BlockCsr m = BlockCsr::build_from_triplets(layout, ts);
    ASSERT_TRUE(m.find_block(0, 1).has_value());
    ASSERT_TRUE(m.find_block(1, 0).has_value());
    EXPECT_FALSE(m.find_block(0, 0).has_value());
    EXPECT_FALSE(m.find_block(1, 1).has_value());
    EXPECT_DOUBLE_EQ(m.block(*m.find_block(1, 0))[0], 2.0);
}

TEST(BlockCsr, BlockRowOfInvertsRowPtr) {
    const std::size_t sizes[] = {1, 6};
    const BlockCsr m = oracle::random_matrix(9, 9, sizes, 0.4, 3);
    for (std::size_t b = 0; b < m.n_blocks(); ++b) {
        const std::size_t r = m.block_row_of(b);
        EXPECT_GE(b, m.row_ptr()[r]);
        EXPECT_LT(b, m.row_ptr()[r + 1]);
    }
}

TEST(Filter, StrictlyGreaterSurvives) {
    const BlockLayout layout({1, 1, 1}, {1});
    std::vector<Triplet> ts;
    ts.push_back({0, 0, {0.5}});   // norm exactly 0.5
    ts.push_back({1, 0, {0.51}});  // above
    ts.push_back({2, 0, {0.0}});   // zero block, kept by assembly
    const BlockCsr m = BlockCsr::build_from_triplets(layout, ts);
    ASSERT_EQ(m.n_blocks(), 3u);

    const BlockCsr at_eps = bsmm::filter_blocks(m, 0.5);
    EXPECT_EQ(at_eps.n_blocks(), 1u);  // the 0.5 block is not > 0.5
    EXPECT_TRUE(at_eps.find_block(1, 0).has_value());

    const BlockCsr below = bsmm::filter_blocks(m, 0.49);
    EXPECT_EQ(below.n_blocks(), 2u);

    // eps = 0 drops exact-zero blocks and nothing else.
    const BlockCsr zero = bsmm::filter_blocks(m, 0.0);
    EXPECT_EQ(zero.n_blocks(), 2u);

    EXPECT_THROW(bsmm::filter_blocks(m, -1.0), bsmm::ParameterError);
}

TEST(Filter, KeptBlocksBitIdentical) {
    const std::size_t sizes[] = {5, 6};
    const BlockCsr m = oracle::random_matrix(8, 8, sizes, 0.5, 11);
    const BlockCsr f = bsmm::filter_blocks(m, 2.0);
    ASSERT_NO_THROW(f.validate());
    for (std::size_t b = 0; b < f.n_blocks(); ++b) {
        const std::size_t br = f.block_row_of(b);
        const std::size_t bc = f.col_idx()[b];
        const auto src = m.find_block(br, bc);
        ASSERT_TRUE(src.has_value());
        const auto fb = f.block(b);
        const auto mb = m.block(*src);
        ASSERT_EQ(fb.size(), mb.size());
        for (std::size_t i = 0; i < fb.size(); ++i) EXPECT_EQ(fb[i], mb[i]);
        EXPECT_GT(f.norms()[b], 2.0);
    }
    // Nothing kept that should have been dropped, nothing dropped that
    // should have been kept.
    std::size_t expect_kept = 0;
    for (std::size_t b = 0; b < m.n_blocks(); ++b) {
        if (m.norms()[b] > 2.0) ++expect_kept;
    }
    EXPECT_EQ(f.n_blocks(), expect_kept);
}

TEST(Builder, MatchesTripletAssembly) {
    const std::size_t sizes[] = {1, 5, 13};
    const BlockLayout layout = oracle::random_layout(6, 7, sizes, 21);
    const auto triplets = oracle::random_triplets(layout, 0.5, 21);
    const BlockCsr want = BlockCsr::build_from_triplets(layout, triplets);

    BlockCsrBuilder builder(layout);
    for (std::size_t b = 0, r = 0; r < layout.n_row_blocks(); ++r) {
        for (; b < want.row_ptr()[r + 1]; ++b) {
            builder.append(r, want.col_idx()[b], want.block(b));
        }
    }
    const BlockCsr got = builder.finish();
    EXPECT_TRUE(got.bit_identical(want));
}

TEST(Builder, RejectsOutOfOrderAppends) {
    const BlockLayout layout({1, 1}, {1, 1});
    {
        BlockCsrBuilder b(layout);
        b.append(0, 1, std::vector<double>{1.0});
        EXPECT_THROW(b.append(0, 0, std::vector<double>{1.0}), bsmm::UsageError);
    }
    {
        BlockCsrBuilder b(layout);
        b.append(1, 0, std::vector<double>{1.0});
        EXPECT_THROW(b.append(0, 0, std::vector<double>{1.0}), bsmm::UsageError);
    }
    {
        BlockCsrBuilder b(layout);
        b.finish();
        EXPECT_THROW(b.append(0, 0, std::vector<double>{1.0}), bsmm::UsageError);
        EXPECT_THROW(b.finish(), bsmm::UsageError);
    }
}

TEST(BitIdentical, DistinguishesValueAndStructure) {
    const BlockLayout layout({2}, {2, 2});
    std::vector<Triplet> ts1;
    ts1.push_back({0, 0, {1.0, 2.0, 3.0, 4.0}});
    std::vector<Triplet> ts2;
    ts2.push_back({0, 0, {1.0, 2.0, 3.0, std::nextafter(4.0, 5.0)}});
    std::vector<Triplet> ts3;
    ts3.push_back({0, 1, {1.0, 2.0, 3.0, 4.0}});

    const BlockCsr a = BlockCsr::build_from_triplets(layout, ts1);
    const BlockCsr b = BlockCsr::build_from_triplets(layout, ts1);
    const BlockCsr c = BlockCsr::build_from_triplets(layout, ts2);
    const BlockCsr d = BlockCsr::build_from_triplets(layout, ts3);
    EXPECT_TRUE(a.bit_identical(b));
    EXPECT_FALSE(a.bit_identical(c));
    EXPECT_FALSE(a.bit_identical(d));
}

TEST(BitIdentical, SignedZeroDiffers) {
    const BlockLayout layout({1}, {1});
    std::vector<Triplet> pos;
    pos.push_back({0, 0, {0.0}});
    std::vector<Triplet> neg;
    neg.push_back({0, 0, {-0.0}});
    const BlockCsr a = BlockCsr::build_from_triplets(layout, pos);
    const BlockCsr b = BlockCsr::build_from_triplets(layout, neg);
    EXPECT_FALSE(a.bit_identical(b));
}

TEST(EmptyMatrix, WellFormed) {
    const BlockLayout layout({2, 3}, {2});
    const BlockCsr m = BlockCsr::build_from_triplets(layout, {});
    ASSERT_NO_THROW(m.validate());
    EXPECT_EQ(m.n_blocks(), 0u);
    const auto d = m.to_dense();
    for (double v : d.data) EXPECT_EQ(v, 0.0);
}

}  // namespace
