#include <doctest.h>

#include <cmath>
#include <vector>

#include "wsosvm/rng.hpp"
#include "wsosvm/simd.hpp"

using namespace wsosvm;

namespace {

std::vector<double> random_vec(rng::Stream& stream, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = stream.uniform(-2.0, 2.0);
    return v;
}

}  // namespace

TEST_CASE("simd lanes agree with the scalar reference") {
    rng::Stream stream(7, "test/simd");
    const simd::Lane initial = simd::active_lane();
    for (simd::Lane lane : {simd::Lane::scalar, simd::Lane::avx2}) {
        if (!simd::set_lane(lane)) continue;  // avx2 unavailable on this host
        for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 15u, 56u, 280u, 281u}) {
            auto a = random_vec(stream, n);
            auto b = random_vec(stream, n);
            double ref_dot = simd::scalar::dot(a.data(), b.data(), n);
            double ref_sq = simd::scalar::sqdist(a.data(), b.data(), n);
            double ref_sum = simd::scalar::sum(a.data(), n);
            double tol = 1e-12 * (1.0 + static_cast<double>(n));
            CHECK(simd::dot(a.data(), b.data(), n) == doctest::Approx(ref_dot).epsilon(tol));
            CHECK(simd::sqdist(a.data(), b.data(), n) ==
                  doctest::Approx(ref_sq).epsilon(tol));
            CHECK(simd::sum(a.data(), n) == doctest::Approx(ref_sum).epsilon(tol));

            auto y_ref = b;
            auto y = b;
            simd::scalar::axpy(0.37, a.data(), y_ref.data(), n);
            simd::axpy(0.37, a.data(), y.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));
        }
    }
    simd::set_lane(initial);
}

TEST_CASE("corr7x7_8x8 matches the scalar reference on every lane") {
    rng::Stream stream(11, "test/simd-corr");
    std::vector<double> padded(14 * 16, 0.0);
    for (double& v : padded) v = stream.uniform(-3.0, 3.0);
    std::vector<double> kernel(7 * 8, 0.0);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) kernel[r * 8 + c] = stream.uniform(-1.0, 1.0);

    std::vector<double> ref(64, 0.0);
    simd::scalar::corr7x7_8x8(padded.data(), 16, kernel.data(), ref.data());

    const simd::Lane initial = simd::active_lane();
    for (simd::Lane lane : {simd::Lane::scalar, simd::Lane::avx2}) {
        if (!simd::set_lane(lane)) continue;
        std::vector<double> out(64, 0.0);
        simd::corr7x7_8x8(padded.data(), 16, kernel.data(), out.data());
        for (int i = 0; i < 64; ++i)
            CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    simd::set_lane(initial);
}

TEST_CASE("dot is exactly symmetric") {
    rng::Stream stream(3, "test/simd-sym");
    auto a = random_vec(stream, 131);
    auto b = random_vec(stream, 131);
    CHECK(simd::dot(a.data(), b.data(), a.size()) == simd::dot(b.data(), a.data(), a.size()));
}

TEST_CASE("rng streams are deterministic and independent") {
    rng::Stream s1(42, "purpose-a");
    rng::Stream s2(42, "purpose-a");
    rng::Stream s3(42, "purpose-b");
    std::vector<std::uint64_t> a, b, c;
    for (int i = 0; i < 16; ++i) {
        a.push_back(s1.next_u64());
        b.push_back(s2.next_u64());
        c.push_back(s3.next_u64());
    }
    CHECK(a == b);
    CHECK(a != c);

    rng::Stream u(9, "uniform");
    for (int i = 0; i < 1000; ++i) {
        double v = u.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(u.next_below(17) < 17);
    }
}
