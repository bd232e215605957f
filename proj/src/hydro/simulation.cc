#include "taskgrid/hydro/simulation.h"

#include "taskgrid/bench/timing.h"
#include "taskgrid/cell_loops.h"
#include "taskgrid/hydro/diffusion.h"
#include "taskgrid/kernels/kernels.h"
#include "taskgrid/validation/riemann.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace taskgrid::hydro {

namespace {

	std::string cell_name(const local_block& b, index_t i, index_t j, index_t k) {
		const auto g = b.local_to_global({i, j, k});
		std::string s = "cell (" + std::to_string(g[0]);
		for(int a = 1; a < b.dims; ++a) s += ", " + std::to_string(g[a]);
		return s + ")";
	}

	state_vector load(field_view<const double> U, int comps, index_t i, index_t j, index_t k) {
		state_vector v{};
		for(int c = 0; c < comps; ++c) v[c] = U.at(c, i, j, k);
		return v;
	}

	primitive checked_primitive(field_view<const double> U, const layout& l, const eos& e, const char* stage, index_t i, index_t j, index_t k) {
		try {
			return to_primitive(load(U, l.components(), i, j, k), l, e, stage);
		} catch(const state_error& err) {
			throw state_error(std::string(err.what()) + " at " + cell_name(U.block(), i, j, k));
		}
	}

	void check_invariants(const task_context& ctx, field_view<const double> U, const layout& l, const eos& e, const char* stage) {
		for_each_cell(ctx, U.block(), [&](index_t i, index_t j, index_t k) { checked_primitive(U, l, e, stage, i, j, k); });
	}

	bool admissible(const primitive& w, const layout& l) {
		return w.rho > 0 && w.p > 0 && std::isfinite(w.rho) && std::isfinite(w.p) && (!l.radiation || w.erad >= 0);
	}

	/// Applies fn(line origin (i, j, k)) to every owned line along `axis`, in parallel chunks.
	template <typename LineFn>
	void for_each_line(const task_context& ctx, const local_block& b, int axis, LineFn&& fn) {
		const int t1 = (axis + 1) % 3;
		const int t2 = (axis + 2) % 3;
		const index_t n1 = t1 < b.dims ? b.owned[t1].size() : 1;
		const index_t n2 = t2 < b.dims ? b.owned[t2].size() : 1;
		const index_t lines = n1 * n2;
		const index_t chunks = std::max<index_t>(1, std::min<index_t>(lines, ctx.workers()));
		ctx.parallel(chunks, [&](index_t c) {
			for(index_t r = lines * c / chunks; r < lines * (c + 1) / chunks; ++r) {
				std::array<index_t, 3> idx{0, 0, 0};
				idx[t1] = r % n1;
				idx[t2] = r / n1;
				fn(idx);
			}
		});
	}

} // namespace

void rhs_advective(
    const task_context& ctx, field_view<const double> U, field_view<double> L, const layout& l, const eos& e, const std::array<double, 3>& dx) {
	const auto& b = U.block();
	const int comps = l.components();
	const int h = b.halo;
	if(h < 3) throw std::invalid_argument("rhs_advective: halo depth must be at least 3");
	// Reconstructed primitive variables: rho, u per active axis, p, optionally E_rad.
	const int nv = l.dims + 2 + (l.radiation ? 1 : 0);

	for(int axis = 0; axis < l.dims; ++axis) {
		const index_t n = b.owned[axis].size();
		const double h_axis = dx[axis];
		for_each_line(ctx, b, axis, [&](const std::array<index_t, 3>& origin) {
			std::vector<std::vector<double>> q(static_cast<std::size_t>(nv), std::vector<double>(static_cast<std::size_t>(n + 6)));
			std::vector<primitive> cell(static_cast<std::size_t>(n + 6));
			for(index_t m = -3; m < n + 3; ++m) {
				auto idx = origin;
				idx[axis] += m;
				const auto w = checked_primitive(U, l, e, "rhs", idx[0], idx[1], idx[2]);
				const auto mi = static_cast<std::size_t>(m + 3);
				cell[mi] = w;
				q[0][mi] = w.rho;
				for(int d = 0; d < l.dims; ++d) q[static_cast<std::size_t>(1 + d)][mi] = w.u[d];
				q[static_cast<std::size_t>(1 + l.dims)][mi] = w.p;
				if(l.radiation) q[static_cast<std::size_t>(2 + l.dims)][mi] = w.erad;
			}
			const auto unpack = [&](const std::array<double, max_components + 1>& v) {
				primitive w;
				w.rho = v[0];
				for(int d = 0; d < l.dims; ++d) w.u[d] = v[static_cast<std::size_t>(1 + d)];
				w.p = v[static_cast<std::size_t>(1 + l.dims)];
				if(l.radiation) w.erad = v[static_cast<std::size_t>(2 + l.dims)];
				return w;
			};
			std::vector<state_vector> F(static_cast<std::size_t>(n + 1));
			for(index_t f = 0; f <= n; ++f) {
				// Interface between cells f-1 and f; buffer index of cell c is c + 3.
				const auto c = static_cast<std::size_t>(f + 3);
				std::array<double, max_components + 1> vl{}, vr{};
				for(int v = 0; v < nv; ++v) {
					const auto& qv = q[static_cast<std::size_t>(v)];
					vl[static_cast<std::size_t>(v)] = weno5z(qv[c - 3], qv[c - 2], qv[c - 1], qv[c], qv[c + 1]);
					vr[static_cast<std::size_t>(v)] = weno5z(qv[c + 2], qv[c + 1], qv[c], qv[c - 1], qv[c - 2]);
				}
				auto wl = unpack(vl);
				auto wr = unpack(vr);
				if(!admissible(wl, l) || !admissible(wr, l)) {
					// First-order fallback keeps the interface states physical.
					wl = cell[c - 1];
					wr = cell[c];
				}
				F[static_cast<std::size_t>(f)] = hll_flux(wl, wr, l, e, axis);
			}
			for(index_t m = 0; m < n; ++m) {
				auto idx = origin;
				idx[axis] += m;
				double* out = L.ptr(0, idx[0], idx[1], idx[2]);
				const auto& lo = F[static_cast<std::size_t>(m)];
				const auto& hi = F[static_cast<std::size_t>(m + 1)];
				for(int comp = 0; comp < comps; ++comp) {
					const double div = (hi[comp] - lo[comp]) / h_axis;
					double& dst = out[comp * b.padded_cells()];
					dst = axis == 0 ? -div : dst - div;
				}
			}
		});
	}
}

void apply_boundaries(field_view<double> U, const layout& l, const std::array<boundary_kind, 3>& kinds) {
	const auto& b = U.block();
	const int comps = l.components();
	for(int a = 0; a < b.dims; ++a) {
		const int t1 = (a + 1) % 3;
		const int t2 = (a + 2) % 3;
		const index_t n1 = t1 < b.dims ? b.owned[t1].size() : 1;
		const index_t n2 = t2 < b.dims ? b.owned[t2].size() : 1;
		const index_t n = b.owned[a].size();
		for(int s = 0; s < 2; ++s) {
			if(!b.boundary[a][s]) continue;
			const bool reflect = kinds[a] == boundary_kind::reflecting;
			for(index_t r2 = 0; r2 < n2; ++r2)
				for(index_t r1 = 0; r1 < n1; ++r1)
					for(int g = 1; g <= b.halo; ++g) {
						std::array<index_t, 3> dst{0, 0, 0}, src{0, 0, 0};
						dst[t1] = src[t1] = r1;
						dst[t2] = src[t2] = r2;
						if(s == 0) {
							dst[a] = -g;
							src[a] = reflect ? g - 1 : 0;
						} else {
							dst[a] = n - 1 + g;
							src[a] = reflect ? n - g : n - 1;
						}
						src[a] = std::clamp<index_t>(src[a], 0, n - 1);
						for(int c = 0; c < comps; ++c) {
							double v = U.at(c, src[0], src[1], src[2]);
							if(reflect && c == layout::mom(a)) v = -v;
							U.at(c, dst[0], dst[1], dst[2]) = v;
						}
					}
		}
	}
}

simulation::simulation(runtime& rt, config cfg) : m_rt(rt), m_cfg(std::move(cfg)) {
	validate(m_cfg);
	m_layout = layout{m_cfg.dims, m_cfg.radiation};
	m_eos = eos{m_cfg.gamma};
	const int ranks = rt.config().ranks;
	std::array<int, 3> colors = m_cfg.colors;
	if(colors == std::array<int, 3>{0, 0, 0}) {
		colors = balanced_color_grid(ranks, m_cfg.dims);
	}
	for(int a = m_cfg.dims; a < 3; ++a) {
		if(colors[a] != 1) throw std::invalid_argument("hydro: color grid has colors along an inactive axis");
	}
	if(colors[0] * colors[1] * colors[2] != ranks) {
		throw std::invalid_argument("hydro: color grid " + std::to_string(colors[0]) + "x" + std::to_string(colors[1]) + "x" +
		    std::to_string(colors[2]) + " does not match " + std::to_string(ranks) + " rank(s)");
	}
	std::array<bool, 3> periodic{};
	for(int a = 0; a < m_cfg.dims; ++a) {
		periodic[a] = m_cfg.boundary[a] == boundary_kind::periodic;
		m_dx[a] = m_cfg.length[a] / static_cast<double>(m_cfg.extents[a]);
	}
	const auto d = static_cast<std::size_t>(m_cfg.dims);
	m_topology = rt.add_topology(mesh_topology::decompose(
	    std::span(m_cfg.extents.data(), d), std::span(colors.data(), d), halo_depth, std::span<const bool>(periodic.data(), d)));

	const std::array<index_t, 1> control_extent{ranks};
	const std::array<int, 1> control_colors{ranks};
	m_control = rt.add_topology(mesh_topology::decompose(control_extent, control_colors, 1));

	const int comps = m_layout.components();
	m_U = rt.register_field(m_topology, "U", element_kind::vector(comps));
	m_Us = rt.register_field(m_topology, "U*", element_kind::vector(comps));
	m_L0 = rt.register_field(m_topology, "L(U)", element_kind::vector(comps));
	m_L1 = rt.register_field(m_topology, "L(U*)", element_kind::vector(comps));
	m_clock = rt.register_field(m_control, "clock", element_kind::vector(2));
	if(m_cfg.radiation) {
		m_rad_x = rt.register_field(m_topology, "E_rad.x", element_kind::scalar());
		m_rad_y = rt.register_field(m_topology, "E_rad.y", element_kind::scalar());
		m_rad_b = rt.register_field(m_topology, "E_rad.b", element_kind::scalar());
		m_rad_coef = rt.register_field(m_topology, "E_rad.coef", element_kind::vector(1 + 2 * m_cfg.dims));
	}
	init_scenario();
}

double simulation::cell_volume() const {
	double v = 1;
	for(int a = 0; a < m_cfg.dims; ++a) v *= m_dx[a];
	return v;
}

void simulation::init_scenario() {
	const auto& c = m_cfg;
	primitive left = c.left;
	primitive right = c.right;
	if(c.scenario == "rankine_hugoniot") {
		const validation::primitive_1d ahead{right.rho, right.u[0], right.p};
		const auto post = validation::post_shock_state(ahead, c.mach, c.gamma);
		left = primitive{post.rho, {post.u, 0, 0}, post.p, left.erad};
	} else if(c.scenario != "sod" && c.scenario != "smooth_wave" && c.scenario != "uniform") {
		throw std::invalid_argument("unknown scenario '" + c.scenario + "'");
	}
	const auto lay = m_layout;
	const auto e = m_eos;
	const auto dx = m_dx;
	const auto U = m_U;
	const auto clock = m_clock;
	const auto kinds = c.boundary;
	m_rt.submit({"hydro.init", {write_discard(U), write_discard(clock)}, simple_body([=](task_context& ctx) {
		             auto u = ctx.write(U);
		             const auto& b = u.block();
		             for_each_cell(ctx, b, [&](index_t i, index_t j, index_t k) {
			             const auto g = b.local_to_global({i, j, k});
			             std::array<double, 3> lo{}, x{};
			             for(int a = 0; a < lay.dims; ++a) {
				             lo[a] = static_cast<double>(g[a]) * dx[a];
				             x[a] = lo[a] + 0.5 * dx[a];
			             }
			             primitive w = left;
			             if(c.scenario == "sod" || c.scenario == "rankine_hugoniot") {
				             w = x[0] < c.interface * c.length[0] ? left : right;
			             } else if(c.scenario == "smooth_wave") {
				             // Exact cell average of rho = 1 + A sin(2 pi x / L) with constant u and p.
				             const double k2 = 2.0 * std::numbers::pi / c.length[0];
				             const double avg = (std::cos(k2 * lo[0]) - std::cos(k2 * (lo[0] + dx[0]))) / (k2 * dx[0]);
				             w.rho = left.rho + c.amplitude * avg;
				             w.u = {c.velocity, 0, 0};
			             }
			             if(c.erad_pulse != 0) {
				             double r2 = 0;
				             for(int a = 0; a < lay.dims; ++a) {
					             const double dxa = x[a] - 0.5 * c.length[a];
					             r2 += dxa * dxa;
				             }
				             w.erad += c.erad_pulse * std::exp(-r2 / (c.erad_pulse_width * c.erad_pulse_width));
			             }
			             const auto cons = to_conserved(w, lay, e);
			             for(int comp = 0; comp < lay.components(); ++comp) u.at(comp, i, j, k) = cons[comp];
		             });
		             apply_boundaries(u, lay, kinds);
		             auto clk = ctx.write(clock);
		             clk.at(0, 0) = 0.0;
		             clk.at(1, 0) = 0.0;
	             })});
}

namespace {
	/// Submits `spec`, timed when benchmark mode is on.
	task_result submit_stage(runtime& rt, bool benchmark, task_spec spec) {
		if(!benchmark) return rt.submit(std::move(spec));
		auto label = spec.label;
		return bench::timed_task(rt, std::move(label), std::move(spec));
	}
} // namespace

task_result simulation::compute_dt() {
	const auto lay = m_layout;
	const auto e = m_eos;
	const auto dx = m_dx;
	const auto U = m_U;
	const auto clock = m_clock;
	const double cfl = m_cfg.cfl;
	const double end_time = m_cfg.end_time;
	return submit_stage(
	    m_rt, m_cfg.benchmark, {"hydro.dt", {read_only(U, false), read_write(clock, false)}, [=](task_context& ctx) -> rank_task<void> {
		                            const auto u = ctx.read(U);
		                            const auto& b = u.block();
		                            // Per-row minima; min is exact, so the chunking cannot affect the result.
		                            const index_t ny = b.dims > 1 ? b.owned[1].size() : 1;
		                            const index_t rows = ny * (b.dims > 2 ? b.owned[2].size() : 1);
		                            const index_t chunks = std::max<index_t>(1, std::min<index_t>(rows, ctx.workers()));
		                            std::vector<double> partial(static_cast<std::size_t>(chunks), INFINITY);
		                            ctx.parallel(chunks, [&](index_t ch) {
			                            auto& m = partial[static_cast<std::size_t>(ch)];
			                            for(index_t r = rows * ch / chunks; r < rows * (ch + 1) / chunks; ++r) {
				                            const index_t j = r % ny;
				                            const index_t k = r / ny;
				                            for(index_t i = 0; i < b.owned[0].size(); ++i) {
					                            const auto w = checked_primitive(u, lay, e, "dt", i, j, k);
					                            const double a = sound_speed(w, e);
					                            for(int ax = 0; ax < lay.dims; ++ax) {
						                            const double v = dx[ax] / (std::abs(w.u[ax]) + a);
						                            if(!std::isfinite(v))
							                            throw state_error("dt: non-finite signal speed at " + cell_name(b, i, j, k));
						                            m = std::min(m, v);
					                            }
				                            }
			                            }
		                            });
		                            double local = INFINITY;
		                            for(const double v : partial) local = std::min(local, v);
		                            const double global = co_await ctx.allreduce(local, reduce_op::min);
		                            auto clk = ctx.write(clock);
		                            const double t = clk.at(1, 0);
		                            double dt = cfl * global;
		                            if(end_time > 0) dt = std::min(dt, end_time - t);
		                            clk.at(0, 0) = dt;
		                            ctx.set_result({dt, t});
	                            }});
}

void simulation::heun_step() {
	const auto lay = m_layout;
	const auto e = m_eos;
	const auto dx = m_dx;
	const auto U = m_U, Us = m_Us, L0 = m_L0, L1 = m_L1, clock = m_clock;
	const auto kinds = m_cfg.boundary;
	const bool bench = m_cfg.benchmark;

	submit_stage(m_rt, bench, {"hydro.rhs(U)", {read_only(U), write_discard(L0)}, simple_body([=](task_context& ctx) {
		                           rhs_advective(ctx, ctx.read(U), ctx.write(L0), lay, e, dx);
	                           })});
	submit_stage(m_rt, bench,
	    {"hydro.predict", {read_only(U, false), read_only(L0, false), read_only(clock, false), write_discard(Us)},
	        simple_body([=](task_context& ctx) {
		        const auto u = ctx.read(U);
		        const auto l0 = ctx.read(L0);
		        auto us = ctx.write(Us);
		        const double dt = ctx.read(clock).at(0, 0);
		        for_each_cell(ctx, u.block(), [&](index_t i, index_t j, index_t k) {
			        for(int c = 0; c < lay.components(); ++c) us.at(c, i, j, k) = u.at(c, i, j, k) + dt * l0.at(c, i, j, k);
		        });
		        check_invariants(ctx, ctx.read(Us), lay, e, "predictor");
		        apply_boundaries(us, lay, kinds);
	        })});
	submit_stage(m_rt, bench, {"hydro.rhs(U*)", {read_only(Us), write_discard(L1)}, simple_body([=](task_context& ctx) {
		                           rhs_advective(ctx, ctx.read(Us), ctx.write(L1), lay, e, dx);
	                           })});
	submit_stage(m_rt, bench,
	    {"hydro.correct", {read_write(U, false), read_only(L0, false), read_only(L1, false), read_write(clock, false)},
	        simple_body([=](task_context& ctx) {
		        auto u = ctx.write(U);
		        const auto l0 = ctx.read(L0);
		        const auto l1 = ctx.read(L1);
		        auto clk = ctx.write(clock);
		        const double dt = clk.at(0, 0);
		        const double half = 0.5 * dt;
		        for_each_cell(ctx, u.block(), [&](index_t i, index_t j, index_t k) {
			        for(int c = 0; c < lay.components(); ++c) u.at(c, i, j, k) = u.at(c, i, j, k) + half * (l0.at(c, i, j, k) + l1.at(c, i, j, k));
		        });
		        clk.at(1, 0) = clk.at(1, 0) + dt;
		        check_invariants(ctx, ctx.read(U), lay, e, "corrector");
		        apply_boundaries(u, lay, kinds);
	        })});
}

task_result simulation::radiation_step() {
	if(!m_cfg.radiation) throw std::logic_error("radiation_step: radiation is disabled");
	const auto lay = m_layout;
	const auto dx = m_dx;
	const auto U = m_U, clock = m_clock;
	const auto X = m_rad_x, Y = m_rad_y, B = m_rad_b, A = m_rad_coef;
	const auto rad = m_cfg.rad;
	const auto kinds = m_cfg.boundary;
	const double tol = m_cfg.jacobi_tolerance;
	const int max_iters = m_cfg.jacobi_max_iterations;
	const bool bench = m_cfg.benchmark;
	const int dims = m_cfg.dims;

	// Backward-Euler operator with D frozen at the old state: diag = 1 + sum w, coef = -w.
	submit_stage(m_rt, bench,
	    {"radiation.operator", {read_only(U), read_only(clock, false), write_discard(A), write_discard(X), write_discard(B)},
	        simple_body([=](task_context& ctx) {
		        const auto u = ctx.read(U);
		        auto a = ctx.write(A);
		        auto x = ctx.write(X);
		        auto bvec = ctx.write(B);
		        const double dt = ctx.read(clock).at(0, 0);
		        const auto& b = u.block();
		        const int rc = layout::rho();
		        const int ec = lay.erad();
		        for_each_cell(ctx, b, [&](index_t i, index_t j, index_t k) {
			        const std::array<index_t, 3> idx{i, j, k};
			        double diag = 1.0;
			        for(int ax = 0; ax < dims; ++ax) {
				        const double scale = dt / (dx[ax] * dx[ax]);
				        for(int s = 0; s < 2; ++s) {
					        auto nb = idx;
					        nb[ax] += s == 0 ? -1 : 1;
					        const bool wall = b.boundary[ax][s].has_value() && (s == 0 ? idx[ax] == 0 : idx[ax] == b.owned[ax].size() - 1);
					        double w = 0;
					        if(!wall) {
						        // Evaluate with (low, high) cell order so both sides of a face agree bitwise.
						        const auto& lo = s == 0 ? nb : idx;
						        const auto& hi = s == 0 ? idx : nb;
						        const double D = face_diffusion(rad, u.at(rc, lo[0], lo[1], lo[2]), u.at(rc, hi[0], hi[1], hi[2]),
						            u.at(ec, lo[0], lo[1], lo[2]), u.at(ec, hi[0], hi[1], hi[2]), dx[ax]);
						        w = scale * D;
					        }
					        a.at(1 + 2 * ax + s, i, j, k) = -w;
					        diag = diag + w;
				        }
			        }
			        a.at(0, i, j, k) = diag;
			        x(i, j, k) = u.at(ec, i, j, k);
			        bvec(i, j, k) = u.at(ec, i, j, k);
		        });
	        })});

	auto solve = submit_stage(m_rt, bench,
	    {"radiation.jacobi", {read_write(X, false), read_only(A, false), read_only(B, false), write_discard(Y)},
	        [=](task_context& ctx) -> rank_task<void> {
		        auto x = ctx.write(X);
		        auto y = ctx.write(Y);
		        const auto a = ctx.read(A);
		        const auto rhs = ctx.read(B);
		        const auto& b = x.block();
		        const auto& kern = kernels::active();
		        const index_t n = b.owned[0].size();
		        std::vector<index_t> offset;
		        for(int ax = 0; ax < dims; ++ax) {
			        offset.push_back(-x.stride(ax));
			        offset.push_back(x.stride(ax));
		        }
		        const int terms = static_cast<int>(offset.size());
		        const auto coef_ptrs = [&](index_t j, index_t k) {
			        std::array<const double*, 6> p{};
			        for(int t = 0; t < terms; ++t) p[static_cast<std::size_t>(t)] = a.ptr(1 + t, 0, j, k);
			        return p;
		        };

		        const exact_sum bsq = sum_cells(ctx, b, [&](index_t i, index_t j, index_t k) { return rhs(i, j, k) * rhs(i, j, k); });
		        const double bnorm = std::sqrt(co_await ctx.allreduce_exact(bsq));

		        int iterations = 0;
		        double rel = 0;
		        for(;;) {
			        co_await ctx.exchange(X);
			        // Residual of the current iterate, one row at a time.
			        const index_t ny = b.dims > 1 ? b.owned[1].size() : 1;
			        const index_t nz = b.dims > 2 ? b.owned[2].size() : 1;
			        const index_t rows = ny * nz;
			        const index_t chunks = std::max<index_t>(1, std::min<index_t>(rows, ctx.workers()));
			        std::vector<exact_sum> partial(static_cast<std::size_t>(chunks));
			        ctx.parallel(chunks, [&](index_t ch) {
				        std::vector<double> r(static_cast<std::size_t>(n));
				        for(index_t row = rows * ch / chunks; row < rows * (ch + 1) / chunks; ++row) {
					        const index_t j = row % ny;
					        const index_t k = row / ny;
					        const auto cp = coef_ptrs(j, k);
					        kern.stencil_residual_row(
					            r.data(), x.ptr(0, 0, j, k), rhs.ptr(0, 0, j, k), a.ptr(0, 0, j, k), cp.data(), offset.data(), terms, n);
					        for(const double v : r) partial[static_cast<std::size_t>(ch)].add(v * v);
				        }
			        });
			        exact_sum rsq;
			        for(const auto& p : partial) rsq.merge(p);
			        const double rnorm = std::sqrt(co_await ctx.allreduce_exact(rsq));
			        rel = bnorm > 0 ? rnorm / bnorm : rnorm;
			        if(rel < tol) break;
			        if(iterations >= max_iters) {
				        throw std::runtime_error("radiation: Jacobi did not converge in " + std::to_string(max_iters) +
				            " iterations (relative residual " + std::to_string(rel) + ")");
			        }
			        for_each_row(ctx, b, [&](index_t j, index_t k) {
				        const auto cp = coef_ptrs(j, k);
				        kern.jacobi_row(
				            y.ptr(0, 0, j, k), x.ptr(0, 0, j, k), rhs.ptr(0, 0, j, k), a.ptr(0, 0, j, k), cp.data(), offset.data(), terms, n);
			        });
			        for_each_row(ctx, b, [&](index_t j, index_t k) { std::copy_n(y.ptr(0, 0, j, k), n, x.ptr(0, 0, j, k)); });
			        ++iterations;
		        }
		        ctx.set_result({static_cast<double>(iterations), rel});
	        }});

	submit_stage(m_rt, bench, {"radiation.update", {read_write(U, false), read_only(X, false)}, simple_body([=](task_context& ctx) {
		                           auto u = ctx.write(U);
		                           const auto x = ctx.read(X);
		                           const int ec = lay.erad();
		                           for_each_cell(ctx, u.block(), [&](index_t i, index_t j, index_t k) {
			                           const double v = x(i, j, k);
			                           if(!(v >= 0))
				                           throw state_error(
				                               "radiation: negative radiation energy " + std::to_string(v) + " at " + cell_name(u.block(), i, j, k));
			                           u.at(ec, i, j, k) = v;
		                           });
		                           apply_boundaries(u, lay, kinds);
	                           })});
	return solve;
}

task_result simulation::totals() {
	const auto U = m_U;
	const int comps = m_layout.components();
	task_spec spec{"hydro.totals", {read_only(U, false)}, simple_body([=](task_context& ctx) {
		               const auto u = ctx.read(U);
		               for(int c = 0; c < comps; ++c) {
			               ctx.contribute(sum_cells(ctx, u.block(), [&](index_t i, index_t j, index_t k) { return u.at(c, i, j, k); }),
			                   static_cast<std::size_t>(c));
		               }
	               })};
	spec.reduce = reduction::sum;
	spec.reduce_width = static_cast<std::size_t>(comps);
	return m_rt.submit(std::move(spec));
}

void simulation::set_clock(double dt, double t) {
	const auto clock = m_clock;
	m_rt.submit({"hydro.set_clock", {read_write(clock, false)}, simple_body([=](task_context& ctx) {
		             auto clk = ctx.write(clock);
		             clk.at(0, 0) = dt;
		             clk.at(1, 0) = t;
	             })});
}

void simulation::step() {
	const int index = static_cast<int>(m_pending.size());
	if(m_cfg.benchmark) m_rt.set_timing_epoch(m_rt.timing_epoch().first, index);
	pending_step p;
	p.dt = compute_dt();
	heun_step();
	if(m_cfg.radiation) p.jacobi = radiation_step();
	p.totals = totals();
	m_pending.push_back(std::move(p));
}

void simulation::advance(int n) {
	for(int s = 0; s < n; ++s) step();
}

int simulation::run_to_end() {
	int taken = 0;
	double t = m_pending.empty() ? 0.0 : time();
	const double end = m_cfg.end_time;
	while(taken < m_cfg.max_steps) {
		if(end > 0 && t >= end) break;
		step();
		++taken;
		const auto& v = m_pending.back().dt.values();
		t = v[1] + v[0];
		if(end > 0 && v[0] <= 0) break;
	}
	return taken;
}

std::vector<step_record> simulation::history() {
	std::vector<step_record> out;
	const double vol = cell_volume();
	for(const auto& p : m_pending) {
		step_record r;
		const auto& dt = p.dt.values();
		r.dt = dt[0];
		r.t = dt[1];
		for(const double v : p.totals.values()) r.totals.push_back(v * vol);
		if(p.jacobi) r.jacobi_iterations = static_cast<int>(p.jacobi->values()[0]);
		out.push_back(std::move(r));
	}
	return out;
}

double simulation::time() {
	if(m_pending.empty()) return 0.0;
	const auto& v = m_pending.back().dt.values();
	return v[1] + v[0];
}

std::vector<double> simulation::gather(int component) { return m_rt.gather(m_U, component); }

std::vector<primitive> simulation::gather_primitives() {
	const int comps = m_layout.components();
	std::vector<std::vector<double>> cols;
	for(int c = 0; c < comps; ++c) cols.push_back(gather(c));
	std::vector<primitive> out(cols[0].size());
	for(std::size_t i = 0; i < out.size(); ++i) {
		state_vector U{};
		for(int c = 0; c < comps; ++c) U[c] = cols[static_cast<std::size_t>(c)][i];
		out[i] = to_primitive(U, m_layout, m_eos, "gather");
	}
	return out;
}

} // namespace taskgrid::hydro
