#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cycleguard/ops.hpp"
#include "cycleguard/rng.hpp"
#include "cycleguard/tensor.hpp"
#include "oracles.hpp"

using namespace cycleguard;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

ConvSpec random_spec(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> k(1, 5), s(1, 3), f(1, 4);
    ConvSpec spec;
    spec.kernel_h = k(rng);
    spec.kernel_w = k(rng);
    spec.stride_h = s(rng);
    spec.stride_w = s(rng);
    spec.filters = f(rng);
    spec.padding = rng() % 2 ? Padding::kSame : Padding::kValid;
    return spec;
}

}  // namespace

TEST_CASE("shape equality and element count") {
    const Shape a{2, 3, 4, 5};
    CHECK(a.rank == 4);
    CHECK(a.count() == 120);
    CHECK(a == Shape{2, 3, 4, 5});
    CHECK(a != Shape{2, 3, 4});
    CHECK(Shape{7}.count() == 7);
}

TEST_CASE("tensor indexing is row major") {
    Tensor t(Shape{2, 3});
    t.at(1, 2) = 5.0;
    CHECK(t[1 * 3 + 2] == 5.0);
    Tensor u(Shape{2, 3, 4, 5});
    u.at(1, 2, 3, 4) = 9.0;
    CHECK(u[((1 * 3 + 2) * 4 + 3) * 5 + 4] == 9.0);
}

TEST_CASE("tensors start zero filled") {
    const Tensor t(Shape{3, 3});
    for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
}

TEST_CASE("bitwise_equal distinguishes -0.0 from 0.0") {
    Tensor a(Shape{1}), b(Shape{1});
    a[0] = 0.0;
    b[0] = -0.0;
    CHECK(a[0] == b[0]);
    CHECK_FALSE(a.bitwise_equal(b));
    b[0] = 0.0;
    CHECK(a.bitwise_equal(b));
}

TEST_CASE("half padding geometry follows the ceil rule") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 7;
    spec.stride_h = spec.stride_w = 2;
    spec.filters = 1;
    const ConvGeometry g = conv_geometry(128, 64, spec);
    CHECK(g.out_h == 64);
    CHECK(g.out_w == 32);
    CHECK(g.pad_top == 2);  // ((64-1)*2 + 7 - 128) / 2
    CHECK(g.pad_left == 2);

    spec.kernel_h = spec.kernel_w = 3;
    spec.stride_h = 2;
    spec.stride_w = 1;
    const ConvGeometry g6 = conv_geometry(4, 2, spec);
    CHECK(g6.out_h == 2);
    CHECK(g6.out_w == 2);
}

TEST_CASE("odd input with stride two still telescopes") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.stride_h = spec.stride_w = 2;
    spec.filters = 1;
    const ConvGeometry g = conv_geometry(5, 5, spec);
    CHECK(g.out_h == 3);
    CHECK(g.out_w == 3);
}

TEST_CASE("conv2d matches a hand-worked 1x4 example") {
    // x = [1 2 3 4], kernel [1 1 1] stride 2 same padding: pad total 1,
    // pad_left 0, outputs at columns 0 and 2: 1+2+3=6 (right edge in bounds)
    // and 3+4+0=7.
    ConvSpec spec;
    spec.kernel_h = 1;
    spec.kernel_w = 3;
    spec.stride_h = 1;
    spec.stride_w = 2;
    spec.filters = 1;
    Tensor x(Shape{1, 1, 4, 1});
    for (std::int64_t j = 0; j < 4; ++j) x.at(0, 0, j, 0) = static_cast<double>(j + 1);
    const Tensor w = Tensor::filled(Shape{1, 3, 1, 1}, 1.0);
    const Tensor b(Shape{1});
    const Tensor y = conv2d(x, w, b, spec);
    REQUIRE(y.shape() == Shape{1, 1, 2, 1});
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(6.0));
    CHECK(y.at(0, 0, 1, 0) == doctest::Approx(7.0));
}

TEST_CASE("conv2d agrees with the padded-buffer oracle on random instances") {
    std::mt19937_64 rng = make_rng(11);
    std::uniform_int_distribution<std::int64_t> dim(1, 9), batch(1, 3), chan(1, 3);
    int done = 0;
    while (done < 60) {
        const ConvSpec spec = random_spec(rng);
        const std::int64_t H = dim(rng), W = dim(rng);
        if (spec.padding == Padding::kValid && (H < spec.kernel_h || W < spec.kernel_w)) continue;
        const std::int64_t B = batch(rng), C = chan(rng);
        const Tensor x = random_tensor(Shape{B, H, W, C}, rng);
        const Tensor w = random_tensor(Shape{spec.kernel_h, spec.kernel_w, C, spec.filters}, rng);
        const Tensor b = random_tensor(Shape{spec.filters}, rng);
        const Tensor got = conv2d(x, w, b, spec);
        const Tensor want = oracles::naive_conv2d(x, w, b, spec);
        REQUIRE(got.shape() == want.shape());
        for (std::int64_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        ++done;
    }
}

TEST_CASE("conv_transpose2d matches the direct adjoint oracle") {
    std::mt19937_64 rng = make_rng(12);
    std::uniform_int_distribution<std::int64_t> dim(4, 10), chan(1, 3);
    for (int it = 0; it < 40; ++it) {
        ConvSpec spec;
        std::uniform_int_distribution<int> k(1, 4), s(1, 2), f(1, 3);
        spec.kernel_h = k(rng);
        spec.kernel_w = k(rng);
        spec.stride_h = s(rng);
        spec.stride_w = s(rng);
        spec.filters = f(rng);
        spec.padding = Padding::kSame;
        // Pick the conv-input extents, derive the transpose-input extents so
        // the declared pair maps back.
        const std::int64_t OH = dim(rng), OW = dim(rng);
        const ConvGeometry g = conv_geometry(OH, OW, spec);
        spec.out_h = static_cast<int>(OH);
        spec.out_w = static_cast<int>(OW);
        const std::int64_t K = chan(rng);
        const Tensor y = random_tensor(Shape{1, g.out_h, g.out_w, K}, rng);
        const Tensor w = random_tensor(Shape{spec.kernel_h, spec.kernel_w, spec.filters, K}, rng);
        const Tensor b = random_tensor(Shape{spec.filters}, rng);
        const Tensor got = conv_transpose2d(y, w, b, spec);
        const Tensor want = oracles::naive_conv_transpose2d(y, w, b, spec, OH, OW);
        REQUIRE(got.shape() == want.shape());
        for (std::int64_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv and transpose are adjoint under the inner product") {
    // <y, conv(x)> == <transpose(y), x> when both use the same weights and
    // zero bias. This pins the transpose against the forward op exactly.
    std::mt19937_64 rng = make_rng(13);
    std::uniform_int_distribution<std::int64_t> dim(3, 12), chan(1, 3);
    for (int it = 0; it < 60; ++it) {
        ConvSpec spec = random_spec(rng);
        spec.padding = Padding::kSame;
        const std::int64_t H = dim(rng), W = dim(rng), C = chan(rng), B = 1 + (it % 2);
        const ConvGeometry g = conv_geometry(H, W, spec);
        const Tensor x = random_tensor(Shape{B, H, W, C}, rng);
        const Tensor w = random_tensor(Shape{spec.kernel_h, spec.kernel_w, C, spec.filters}, rng);
        const Tensor zero_f(Shape{spec.filters});
        const Tensor zero_c(Shape{C});
        const Tensor y = random_tensor(Shape{B, g.out_h, g.out_w, spec.filters}, rng);

        const Tensor cx = conv2d(x, w, zero_f, spec);
        ConvSpec tspec = spec;
        tspec.filters = static_cast<int>(C);
        tspec.out_h = static_cast<int>(H);
        tspec.out_w = static_cast<int>(W);
        // Transpose weights are (kh,kw,out,in); for the adjoint of this conv
        // that is (kh,kw,C,F), the very same tensor w.
        const Tensor ty = conv_transpose2d(y, w, zero_c, tspec);
        CHECK(oracles::dot(y, cx) == doctest::Approx(oracles::dot(ty, x)).epsilon(1e-10));
    }
}

TEST_CASE("transpose at stride 1 infers its extent; stride 2 requires it") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.filters = 2;
    const Tensor y = Tensor::filled(Shape{1, 4, 4, 2}, 0.5);
    const Tensor w(Shape{3, 3, 2, 2});
    const Tensor b(Shape{2});
    const Tensor out = conv_transpose2d(y, w, b, spec);
    CHECK(out.shape() == Shape{1, 4, 4, 2});

    spec.stride_h = 2;
    CHECK_THROWS_AS(conv_transpose2d(y, w, b, spec), DimensionError);
}

TEST_CASE("transpose rejects declared extents that do not map back") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.stride_h = spec.stride_w = 2;
    spec.filters = 1;
    spec.out_h = 9;  // conv_geometry(9, .) gives 5, input below has 4 rows
    spec.out_w = 8;
    const Tensor y(Shape{1, 4, 4, 1});
    const Tensor w(Shape{3, 3, 1, 1});
    const Tensor b(Shape{1});
    CHECK_THROWS_AS(conv_transpose2d(y, w, b, spec), DimensionError);
}

TEST_CASE("dense matches the oracle for rank 1 and rank 2 input") {
    std::mt19937_64 rng = make_rng(14);
    for (int it = 0; it < 30; ++it) {
        std::uniform_int_distribution<std::int64_t> dim(1, 8);
        const std::int64_t K = dim(rng), M = dim(rng), B = dim(rng);
        const Tensor w = random_tensor(Shape{K, M}, rng);
        const Tensor b = random_tensor(Shape{M}, rng);
        const Tensor x1 = random_tensor(Shape{K}, rng);
        const Tensor x2 = random_tensor(Shape{B, K}, rng);
        const Tensor g1 = dense(x1, w, b), w1 = oracles::naive_dense(x1, w, b);
        const Tensor g2 = dense(x2, w, b), w2 = oracles::naive_dense(x2, w, b);
        for (std::int64_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == doctest::Approx(w1[i]).epsilon(1e-12));
        for (std::int64_t i = 0; i < g2.size(); ++i) CHECK(g2[i] == doctest::Approx(w2[i]).epsilon(1e-12));
    }
}

TEST_CASE("relu clamps negatives and keeps exact zeros") {
    Tensor x(Shape{5});
    x[0] = -1.5;
    x[1] = 0.0;
    x[2] = -0.0;
    x[3] = 2.5;
    x[4] = 1e-300;
    const Tensor y = relu(x);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 2.5);
    CHECK(y[4] == 1e-300);
}

TEST_CASE("pad_crop pads with exact zeros and crops verbatim") {
    std::mt19937_64 rng = make_rng(15);
    const Tensor x = random_tensor(Shape{3, 4}, rng);
    const Tensor padded = pad_crop(x, 5, 6, PadMode::kPad);
    REQUIRE(padded.shape() == Shape{5, 6});
    for (std::int64_t r = 0; r < 5; ++r)
        for (std::int64_t c = 0; c < 6; ++c) {
            if (r < 3 && c < 4)
                CHECK(padded.at(r, c) == x.at(r, c));
            else
                CHECK(padded.at(r, c) == 0.0);
        }
    const Tensor back = pad_crop(padded, 3, 4, PadMode::kCrop);
    CHECK(back.bitwise_equal(x));
}

TEST_CASE("pad_crop round-trips rank 4 on the spatial axes") {
    std::mt19937_64 rng = make_rng(16);
    const Tensor x = random_tensor(Shape{2, 3, 4, 2}, rng);
    const Tensor up = pad_crop(x, 6, 7, PadMode::kPad);
    REQUIRE(up.shape() == Shape{2, 6, 7, 2});
    CHECK(pad_crop(up, 3, 4, PadMode::kCrop).bitwise_equal(x));
}

TEST_CASE("ops reject shape mismatches") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.filters = 2;
    const Tensor x(Shape{1, 4, 4, 3});
    const Tensor w(Shape{3, 3, 2, 2});  // channel mismatch
    const Tensor b(Shape{2});
    CHECK_THROWS_AS(conv2d(x, w, b, spec), DimensionError);
    CHECK_THROWS_AS(dense(Tensor(Shape{3}), Tensor(Shape{4, 2}), Tensor(Shape{2})), DimensionError);
    CHECK_THROWS_AS(dense(Tensor(Shape{4}), Tensor(Shape{4, 2}), Tensor(Shape{3})), DimensionError);
}

TEST_CASE("non-finite input is a numeric error") {
    ConvSpec spec;
    spec.kernel_h = spec.kernel_w = 1;
    spec.filters = 1;
    Tensor x(Shape{1, 2, 2, 1});
    x[0] = std::numeric_limits<double>::quiet_NaN();
    const Tensor w = Tensor::filled(Shape{1, 1, 1, 1}, 1.0);
    const Tensor b(Shape{1});
    CHECK_THROWS_AS(conv2d(x, w, b, spec), NumericError);
}
