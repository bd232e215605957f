#include "taskgrid/exact_sum.h"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace taskgrid {

namespace {
	__extension__ typedef unsigned __int128 u128;

	constexpr std::int64_t limb_base = std::int64_t{1} << exact_sum::limb_bits;
	constexpr std::int64_t limb_mask = limb_base - 1;
	// Each add() touches a limb by at most 2^32 in magnitude; carry well before int64 overflow.
	constexpr std::uint32_t max_pending = 1u << 29;
} // namespace

void exact_sum::add(double v) {
	if(!std::isfinite(v)) {
		if(std::isnan(v))
			m_special |= 4u;
		else
			m_special |= v > 0 ? 1u : 2u;
		return;
	}
	if(v == 0.0) return;

	int exp = 0;
	const double frac = std::frexp(v, &exp); // v = frac * 2^exp, 0.5 <= |frac| < 1
	// 53-bit integer mantissa: v = mant * 2^(exp - 53)
	auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
	int shift = exp - 53 + bias;
	if(shift < 0) {
		// subnormal range: low bits of mant are zero, drop them exactly
		mant >>= -shift;
		shift = 0;
	}
	const bool negative = mant < 0;
	std::uint64_t mag = negative ? static_cast<std::uint64_t>(-mant) : static_cast<std::uint64_t>(mant);

	const int limb = shift / limb_bits;
	const int offset = shift % limb_bits;
	// mag < 2^53, offset < 32: the shifted value spans at most three limbs
	const u128 wide = static_cast<u128>(mag) << offset;
	const std::int64_t parts[3] = {
	    static_cast<std::int64_t>(static_cast<std::uint64_t>(wide) & limb_mask),
	    static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 32) & limb_mask),
	    static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64) & limb_mask),
	};
	for(int k = 0; k < 3; ++k) {
		if(parts[k] == 0) continue;
		assert(limb + k < num_limbs);
		m_limbs[limb + k] += negative ? -parts[k] : parts[k];
	}
	if(++m_pending >= max_pending) normalize();
}

void exact_sum::merge(const exact_sum& other) {
	auto rhs = other;
	rhs.normalize();
	normalize();
	for(int k = 0; k < num_limbs; ++k) {
		m_limbs[k] += rhs.m_limbs[k];
	}
	m_special |= rhs.m_special;
	m_pending = 1;
}

void exact_sum::normalize() {
	// Carry-propagate so limbs 0..n-2 lie in [0, 2^32); the top limb carries the sign.
	std::int64_t carry = 0;
	for(int k = 0; k < num_limbs - 1; ++k) {
		const std::int64_t v = m_limbs[k] + carry;
		carry = v >> limb_bits; // arithmetic shift: floor division
		m_limbs[k] = v & limb_mask;
	}
	m_limbs[num_limbs - 1] += carry;
	m_pending = 0;
}

double exact_sum::value() const {
	if(m_special & 4u) return std::numeric_limits<double>::quiet_NaN();
	if((m_special & 3u) == 3u) return std::numeric_limits<double>::quiet_NaN();
	if(m_special & 1u) return std::numeric_limits<double>::infinity();
	if(m_special & 2u) return -std::numeric_limits<double>::infinity();

	auto n = *this;
	n.normalize();
	const bool negative = n.m_limbs[num_limbs - 1] < 0;
	if(negative) {
		// two's complement negation across the limb array
		std::int64_t carry = 1;
		for(int k = 0; k < num_limbs - 1; ++k) {
			const std::int64_t v = (~n.m_limbs[k] & limb_mask) + carry;
			carry = v >> limb_bits;
			n.m_limbs[k] = v & limb_mask;
		}
		n.m_limbs[num_limbs - 1] = -n.m_limbs[num_limbs - 1] - 1 + carry;
	}
	int top = num_limbs - 1;
	while(top >= 0 && n.m_limbs[top] == 0) {
		--top;
	}
	if(top < 0) return 0.0;

	// Gather the leading 96 bits into one 128-bit integer plus a sticky bit, then round once.
	u128 head = 0;
	bool sticky = false;
	for(int k = top; k >= top - 2; --k) {
		head <<= 32;
		if(k >= 0) head |= static_cast<std::uint64_t>(n.m_limbs[k]);
	}
	for(int k = top - 3; k >= 0; --k) {
		if(n.m_limbs[k] != 0) {
			sticky = true;
			break;
		}
	}
	// head has at most 96 significant bits; reduce to 64 with round-to-odd so the final
	// conversion to double rounds correctly.
	int lost = 0;
	while((head >> 64) != 0) {
		sticky = sticky || (head & 1u);
		head >>= 1;
		++lost;
	}
	auto h64 = static_cast<std::uint64_t>(head);
	if(sticky) h64 |= 1u;
	const double mag = std::ldexp(static_cast<double>(h64), lost + (top - 2) * limb_bits - bias);
	return negative ? -mag : mag;
}

std::vector<double> exact_sum::encode() const {
	auto n = *this;
	n.normalize();
	std::vector<double> words;
	words.reserve(encoded_size);
	for(const auto limb : n.m_limbs) {
		words.push_back(static_cast<double>(limb));
	}
	words.push_back(static_cast<double>(n.m_special));
	return words;
}

exact_sum exact_sum::decode(std::span<const double> words) {
	if(words.size() != encoded_size) throw std::invalid_argument("exact_sum::decode: wrong payload size");
	exact_sum s;
	for(int k = 0; k < num_limbs; ++k) {
		s.m_limbs[k] = static_cast<std::int64_t>(words[k]);
	}
	s.m_special = static_cast<std::uint32_t>(words[num_limbs]);
	s.m_pending = 1;
	return s;
}

} // namespace taskgrid
