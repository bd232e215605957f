#pragma once

#include "taskgrid/exact_sum.h"
#include "taskgrid/rank_task.h"
#include "taskgrid/transport.h"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace taskgrid {

enum class reduce_op { sum, max, min };
enum class collective_algorithm { star, binomial_tree };

std::string_view to_string(reduce_op op);
std::string_view to_string(collective_algorithm a);
collective_algorithm parse_collective_algorithm(std::string_view s);

/// Combines the contributions of all ranks, indexed by rank.
using fold_fn = std::function<payload(const std::vector<payload>& by_rank)>;

/// Elementwise fold in ascending rank order.
fold_fn elementwise_fold(reduce_op op);
/// Contributions are exact_sum encodings concatenated per element; result is the merged encoding.
fold_fn exact_sum_fold();

/// Allreduce over all ranks of the channel's transport.
///
/// All contributions are gathered at rank 0 (directly for star, up a binomial tree
/// otherwise), folded there in ascending rank order, and the result is sent back along
/// the same structure. Every rank receives bitwise-identical results regardless of the
/// algorithm. `op_code` must agree across ranks; a mismatch raises std::logic_error.
rank_task<payload> allreduce(rank_channel& ch, payload contribution, fold_fn fold, collective_algorithm algorithm, int op_code = 0);

rank_task<double> allreduce(rank_channel& ch, double value, reduce_op op, collective_algorithm algorithm);

/// Runs one allreduce with every rank driven from the calling thread. `contributions`
/// must have one entry per transport rank, otherwise std::invalid_argument is thrown.
std::vector<double> allreduce_all(
    transport& t, std::span<const double> contributions, reduce_op op, collective_algorithm algorithm, std::uint64_t tag_base = 0);

} // namespace taskgrid
