#include "taskgrid/exact_sum.h"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using taskgrid::exact_sum;

TEST_CASE("exact_sum recovers simple sums", "[exact_sum]") {
	exact_sum s;
	for(int i = 1; i <= 100; ++i) s.add(i);
	CHECK(s.value() == 5050.0);

	exact_sum cancel;
	cancel.add(1e300);
	cancel.add(1.0);
	cancel.add(-1e300);
	CHECK(cancel.value() == 1.0);

	CHECK(exact_sum{}.value() == 0.0);
	CHECK(exact_sum(-0.5).value() == -0.5);
}

TEST_CASE("exact_sum handles subnormals and the extremes of the range", "[exact_sum]") {
	const double tiny = std::numeric_limits<double>::denorm_min();
	exact_sum s;
	s.add(tiny);
	s.add(tiny);
	CHECK(s.value() == 2 * tiny);

	exact_sum big;
	big.add(std::numeric_limits<double>::max());
	big.add(-std::numeric_limits<double>::max());
	big.add(tiny);
	CHECK(big.value() == tiny);

	exact_sum overflow;
	overflow.add(std::numeric_limits<double>::max());
	overflow.add(std::numeric_limits<double>::max());
	CHECK(std::isinf(overflow.value()));
}

TEST_CASE("exact_sum propagates non-finite values", "[exact_sum]") {
	exact_sum s;
	s.add(1.0);
	s.add(std::numeric_limits<double>::infinity());
	CHECK(s.value() == std::numeric_limits<double>::infinity());
	s.add(-std::numeric_limits<double>::infinity());
	CHECK(std::isnan(s.value()));
}

TEST_CASE("exact_sum is order independent and correctly rounded", "[exact_sum][property]") {
	std::mt19937_64 rng(1234);
	std::uniform_real_distribution<double> mant(-1.0, 1.0);
	std::uniform_int_distribution<int> expo(-60, 60);
	for(int trial = 0; trial < 50; ++trial) {
		std::vector<double> v(1 + rng() % 500);
		for(auto& x : v) x = std::ldexp(mant(rng), expo(rng));

		exact_sum forward;
		for(const double x : v) forward.add(x);
		auto shuffled = v;
		std::shuffle(shuffled.begin(), shuffled.end(), rng);
		exact_sum a, b;
		for(std::size_t i = 0; i < shuffled.size(); ++i) (i % 3 == 0 ? a : b).add(shuffled[i]);
		a.merge(b);
		REQUIRE(a == forward);
		REQUIRE(a.value() == forward.value());

		// Oracle: long double pairwise sum is not exact, but the exact result must lie within one ulp of it.
		long double ref = 0;
		for(const double x : v) ref += x;
		const double r = forward.value();
		CHECK(std::abs(static_cast<long double>(r) - ref) <= std::abs(ref) * 1e-15L + 1e-300L);
	}
}

TEST_CASE("exact_sum rounds to nearest even on ties", "[exact_sum]") {
	// 1 + 2^-53 is exactly halfway between 1 and the next double; ties go to the even mantissa (1.0).
	exact_sum s;
	s.add(1.0);
	s.add(std::ldexp(1.0, -53));
	CHECK(s.value() == 1.0);
	// 1 + 2^-52 + 2^-53 is halfway between two doubles, rounds up to the even one.
	exact_sum t;
	t.add(1.0);
	t.add(std::ldexp(1.0, -52));
	t.add(std::ldexp(1.0, -53));
	CHECK(t.value() == 1.0 + std::ldexp(1.0, -51));
	// A sticky bit beyond the tie breaks it upwards.
	exact_sum u;
	u.add(1.0);
	u.add(std::ldexp(1.0, -53));
	u.add(std::ldexp(1.0, -200));
	CHECK(u.value() == std::nextafter(1.0, 2.0));
}

TEST_CASE("exact_sum encoding round-trips", "[exact_sum]") {
	exact_sum s;
	s.add(3.25);
	s.add(-1e-200);
	s.add(7e150);
	const auto enc = s.encode();
	REQUIRE(enc.size() == exact_sum::encoded_size);
	const auto d = exact_sum::decode(enc);
	CHECK(d == s);
	CHECK(d.value() == s.value());
}
