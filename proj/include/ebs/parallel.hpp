#pragma once

#include <Eigen/Core>
#include <functional>

namespace ebs {

/// Worker count: ENSEMBLE_BACKSTEP_THREADS when set and positive, else hardware concurrency.
int thread_count();

/// Overrides the worker count for this process (0 restores the environment default).
void set_thread_count(int n);

/// Calls body(i) for every i in [0, n). Items are claimed dynamically, so body
/// must only write state owned by item i; results are then independent of the
/// thread count and of scheduling.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body);

}  // namespace ebs
