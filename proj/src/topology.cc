#include "taskgrid/topology.h"

#include <algorithm>
#include <stdexcept>

namespace taskgrid {

index_t local_block::owned_cells() const {
	index_t n = 1;
	for(int a = 0; a < dims; ++a) {
		n *= owned[a].size();
	}
	return n;
}

index_t local_block::padded_cells() const { return pad[0] * pad[1] * pad[2]; }

index_t local_block::stride(int axis) const {
	index_t s = 1;
	for(int a = 0; a < axis; ++a) {
		s *= pad[a];
	}
	return s;
}

std::array<index_t, max_dims> local_block::global_to_local(const std::array<index_t, max_dims>& g) const {
	std::array<index_t, max_dims> l{};
	for(int a = 0; a < dims; ++a) {
		l[a] = g[a] - owned[a].begin;
	}
	return l;
}

std::array<index_t, max_dims> local_block::local_to_global(const std::array<index_t, max_dims>& l) const {
	std::array<index_t, max_dims> g{};
	for(int a = 0; a < dims; ++a) {
		g[a] = l[a] + owned[a].begin;
	}
	return g;
}

mesh_topology mesh_topology::decompose(
    std::span<const index_t> global_extents, std::span<const int> color_grid, int halo_depth, std::span<const bool> periodic) {
	if(global_extents.empty() || global_extents.size() > max_dims) {
		throw std::invalid_argument("decompose: dimensionality must be 1 to 3, got " + std::to_string(global_extents.size()));
	}
	if(color_grid.size() != global_extents.size()) {
		throw std::invalid_argument(
		    "decompose: color grid has " + std::to_string(color_grid.size()) + " axes, extents have " + std::to_string(global_extents.size()));
	}
	if(!periodic.empty() && periodic.size() != global_extents.size()) {
		throw std::invalid_argument("decompose: periodic flags do not match dimensionality");
	}
	if(halo_depth < 1) throw std::invalid_argument("decompose: halo depth must be >= 1");

	mesh_topology t;
	t.m_dims = static_cast<int>(global_extents.size());
	t.m_halo = halo_depth;
	for(int a = 0; a < t.m_dims; ++a) {
		if(global_extents[a] <= 0) throw std::invalid_argument("decompose: zero extent on axis " + std::to_string(a));
		if(color_grid[a] <= 0) throw std::invalid_argument("decompose: zero colors on axis " + std::to_string(a));
		if(color_grid[a] > global_extents[a]) {
			throw std::invalid_argument("decompose: axis " + std::to_string(a) + " has " + std::to_string(color_grid[a]) + " colors but only " +
			    std::to_string(global_extents[a]) + " cells");
		}
		t.m_extents[a] = global_extents[a];
		t.m_colors[a] = color_grid[a];
		t.m_periodic[a] = periodic.empty() ? false : periodic[a];
	}
	for(int a = 0; a < t.m_dims; ++a) {
		// Every block that feeds a ghost slab must own at least halo_depth cells along the axis.
		if(t.m_colors[a] > 1 || t.m_periodic[a]) {
			const index_t thinnest = t.m_extents[a] / t.m_colors[a];
			if(thinnest < halo_depth) {
				throw std::invalid_argument("decompose: blocks on axis " + std::to_string(a) + " own " + std::to_string(thinnest) +
				    " cells, fewer than halo depth " + std::to_string(halo_depth));
			}
		}
	}
	return t;
}

interval mesh_topology::owned_interval(int axis, int c) const {
	const index_t n = m_extents[axis];
	const index_t colors = m_colors[axis];
	const index_t base = n / colors;
	const index_t rem = n % colors;
	const index_t begin = c * base + std::min<index_t>(c, rem);
	const index_t size = base + (c < rem ? 1 : 0);
	return {begin, begin + size};
}

int mesh_topology::owner_coord(int axis, index_t i) const {
	const index_t n = m_extents[axis];
	const index_t colors = m_colors[axis];
	const index_t base = n / colors;
	const index_t rem = n % colors;
	const index_t split = rem * (base + 1); // cells held by the enlarged leading blocks
	if(i < split) return static_cast<int>(i / (base + 1));
	return static_cast<int>(rem + (i - split) / base);
}

int mesh_topology::owner_color(const std::array<index_t, max_dims>& g) const {
	std::array<int, max_dims> c{};
	for(int a = 0; a < m_dims; ++a) {
		c[a] = owner_coord(a, g[a]);
	}
	return color_id(c);
}

index_t mesh_topology::wrap(int axis, index_t i) const {
	const index_t n = m_extents[axis];
	return ((i % n) + n) % n;
}

std::array<int, max_dims> mesh_topology::color_coord(int color) const {
	return {color % m_colors[0], (color / m_colors[0]) % m_colors[1], color / (m_colors[0] * m_colors[1])};
}

int mesh_topology::color_id(const std::array<int, max_dims>& coord) const { return (coord[2] * m_colors[1] + coord[1]) * m_colors[0] + coord[0]; }

local_block mesh_topology::block(int color) const {
	if(color < 0 || color >= num_colors()) {
		throw std::out_of_range("block: color " + std::to_string(color) + " out of range [0, " + std::to_string(num_colors()) + ")");
	}
	local_block b;
	b.color = color;
	b.dims = m_dims;
	b.halo = m_halo;
	b.color_coord = color_coord(color);
	for(int a = 0; a < max_dims; ++a) {
		b.owned[a] = a < m_dims ? owned_interval(a, b.color_coord[a]) : interval{0, 1};
		b.neighbor[a] = {color, color};
		b.pad[a] = a < m_dims ? b.owned[a].size() + 2 * m_halo : 1;
	}
	for(int a = 0; a < m_dims; ++a) {
		const auto own = b.owned[a];
		const int c = b.color_coord[a];
		for(const auto s : {side::low, side::high}) {
			const int si = static_cast<int>(s);
			const interval slab = s == side::low ? interval{own.begin - m_halo, own.begin} : interval{own.end, own.end + m_halo};
			const bool at_edge = s == side::low ? c == 0 : c == m_colors[a] - 1;
			if(at_edge && !m_periodic[a]) {
				b.boundary[a][si] = slab;
				continue;
			}
			auto nc = b.color_coord;
			nc[a] = s == side::low ? (c + m_colors[a] - 1) % m_colors[a] : (c + 1) % m_colors[a];
			b.ghost[a][si] = slab;
			b.neighbor[a][si] = color_id(nc);
		}
	}
	return b;
}

exchange_plan mesh_topology::plan() const {
	exchange_plan p;
	for(int color = 0; color < num_colors(); ++color) {
		const auto b = block(color);
		for(int a = 0; a < m_dims; ++a) {
			for(const auto s : {side::low, side::high}) {
				const int si = static_cast<int>(s);
				if(!b.ghost[a][si]) continue;
				const auto& g = *b.ghost[a][si];
				// The slab is contiguous in global index space once wrapped, since blocks are at least halo thick.
				const index_t first = wrap(a, g.begin);
				p.transfers.push_back(transfer{b.neighbor[a][si], color, a, s, interval{first, first + g.size()}});
			}
		}
	}
	return p;
}

std::array<int, max_dims> balanced_color_grid(int ranks, int dims) {
	if(ranks < 1) throw std::invalid_argument("balanced_color_grid: ranks must be >= 1");
	if(dims < 1 || dims > max_dims) throw std::invalid_argument("balanced_color_grid: dims must be 1 to 3");
	std::array<int, max_dims> grid{1, 1, 1};
	// Distribute prime factors, largest first, onto the currently smallest axis.
	std::vector<int> factors;
	int r = ranks;
	for(int f = 2; f * f <= r; ++f) {
		while(r % f == 0) {
			factors.push_back(f);
			r /= f;
		}
	}
	if(r > 1) factors.push_back(r);
	std::sort(factors.rbegin(), factors.rend());
	for(const int f : factors) {
		const auto smallest = std::min_element(grid.begin(), grid.begin() + dims);
		*smallest *= f;
	}
	std::sort(grid.begin(), grid.begin() + dims, std::greater<>());
	return grid;
}

} // namespace taskgrid
