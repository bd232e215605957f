#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace taskgrid {

/// Exact fixed-point accumulator for sums of doubles.
///
/// Every finite double is a multiple of 2^-1074, so the running sum is held as
/// a wide integer split into 32-bit limbs. Addition is exact, which makes the
/// result independent of the order and grouping of the terms: partial sums
/// computed per color, per worker chunk, or in a single pass all merge to the
/// same bits. Conversion back to double is a pure function of the integer.
class exact_sum {
  public:
	static constexpr int limb_bits = 32;
	static constexpr int bias = 1088; // 2^-bias is the weight of limb 0
	static constexpr int num_limbs = 68;

	exact_sum() = default;
	explicit exact_sum(double v) { add(v); }

	void add(double v);
	void merge(const exact_sum& other);

	exact_sum& operator+=(double v) {
		add(v);
		return *this;
	}
	exact_sum& operator+=(const exact_sum& other) {
		merge(other);
		return *this;
	}

	/// Rounds the exact sum to double. Deterministic; within one ulp.
	double value() const;

	/// Lossless encoding as doubles (each limb is an integer below 2^53).
	std::vector<double> encode() const;
	static exact_sum decode(std::span<const double> words);
	static constexpr std::size_t encoded_size = num_limbs + 1;

	friend bool operator==(const exact_sum& a, const exact_sum& b) {
		auto na = a, nb = b;
		na.normalize();
		nb.normalize();
		return na.m_limbs == nb.m_limbs && na.m_special == nb.m_special;
	}

  private:
	void normalize();

	std::array<std::int64_t, num_limbs> m_limbs{};
	std::uint32_t m_pending = 0; // additions since last carry propagation
	// bit 0: +inf seen, bit 1: -inf seen, bit 2: nan seen
	std::uint32_t m_special = 0;
};

} // namespace taskgrid
