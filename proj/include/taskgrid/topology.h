#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace taskgrid {

using index_t = std::int64_t;

inline constexpr int max_dims = 3;

enum class side : int { low = 0, high = 1 };

/// Half-open interval of global cell indices along one axis.
struct interval {
	index_t begin = 0;
	index_t end = 0;

	index_t size() const { return end - begin; }
	bool contains(index_t i) const { return i >= begin && i < end; }
	friend bool operator==(const interval&, const interval&) = default;
};

using extents = std::array<index_t, max_dims>;

/// Per-color view of the decomposition. Global indices along a periodic axis are
/// stored unwrapped for ghosts (they may lie outside [0, extent)); use
/// mesh_topology::wrap to map them back into the domain.
struct local_block {
	int color = 0;
	std::array<int, max_dims> color_coord{};
	std::array<interval, max_dims> owned{};
	/// Ghost slab per (axis, side), filled by exchange. Empty when the side is a physical boundary.
	std::array<std::array<std::optional<interval>, 2>, max_dims> ghost{};
	/// Neighbor color that owns the ghost slab per (axis, side).
	std::array<std::array<int, 2>, max_dims> neighbor{};
	/// Boundary slab per (axis, side), outside the global domain. Filled by boundary conditions.
	std::array<std::array<std::optional<interval>, 2>, max_dims> boundary{};

	int halo = 0;
	int dims = 0;
	/// Storage extents including halo layers on active axes.
	extents pad{1, 1, 1};

	const extents& padded() const { return pad; }
	index_t owned_cells() const;
	index_t padded_cells() const;

	/// Local coordinates: owned cells are [0, owned[a].size()), halo cells are negative or past the end.
	index_t linear(index_t i, index_t j = 0, index_t k = 0) const {
		const auto& p = pad;
		const index_t li = i + (dims > 0 ? halo : 0);
		const index_t lj = j + (dims > 1 ? halo : 0);
		const index_t lk = k + (dims > 2 ? halo : 0);
		return (lk * p[1] + lj) * p[0] + li;
	}

	/// Distance in linear storage between neighbors along axis a.
	index_t stride(int axis) const;

	std::array<index_t, max_dims> global_to_local(const std::array<index_t, max_dims>& g) const;
	std::array<index_t, max_dims> local_to_global(const std::array<index_t, max_dims>& l) const;
};

struct transfer {
	int send_color = 0;
	int recv_color = 0;
	int axis = 0;
	side recv_side = side::low; // which ghost slab of recv_color this fills
	interval cells; // global indices along `axis` on the sender's owned range
	friend bool operator==(const transfer&, const transfer&) = default;
};

struct exchange_plan {
	std::vector<transfer> transfers;
};

/// Block decomposition of a structured grid into colors.
class mesh_topology {
  public:
	/// Throws std::invalid_argument on zero extents or colors, more colors than cells,
	/// halo_depth < 1, or blocks too thin to supply a full halo to their neighbors.
	static mesh_topology decompose(
	    std::span<const index_t> global_extents, std::span<const int> color_grid, int halo_depth = 1, std::span<const bool> periodic = {});

	int dims() const { return m_dims; }
	const extents& global_extents() const { return m_extents; }
	const std::array<int, max_dims>& color_grid() const { return m_colors; }
	int halo_depth() const { return m_halo; }
	bool periodic(int axis) const { return m_periodic[axis]; }
	int num_colors() const { return m_colors[0] * m_colors[1] * m_colors[2]; }
	index_t global_cells() const { return m_extents[0] * m_extents[1] * m_extents[2]; }

	/// Owned interval of the block with coordinate c along axis a (leading blocks absorb the remainder).
	interval owned_interval(int axis, int c) const;
	/// Color coordinate along axis a that owns global index i (must be inside the domain).
	int owner_coord(int axis, index_t i) const;
	/// Color that owns a global cell (indices must be inside the domain).
	int owner_color(const std::array<index_t, max_dims>& g) const;
	index_t wrap(int axis, index_t i) const;

	std::array<int, max_dims> color_coord(int color) const;
	int color_id(const std::array<int, max_dims>& coord) const;

	/// Throws std::out_of_range for an invalid color.
	local_block block(int color) const;
	exchange_plan plan() const;

  private:
	int m_dims = 1;
	extents m_extents{1, 1, 1};
	std::array<int, max_dims> m_colors{1, 1, 1};
	int m_halo = 1;
	std::array<bool, max_dims> m_periodic{};
};

/// Convenience wrappers mirroring the operations on mesh_topology.
inline local_block local_block_of(const mesh_topology& t, int color) { return t.block(color); }
inline exchange_plan exchange_plan_of(const mesh_topology& t) { return t.plan(); }

/// Near-square factorization of `ranks` colors over `dims` axes (largest factor first).
std::array<int, max_dims> balanced_color_grid(int ranks, int dims);

} // namespace taskgrid
