#ifndef RBCOUNT_RBCOUNT_HPP
#define RBCOUNT_RBCOUNT_HPP

#include "rbcount/bigint.hpp"
#include "rbcount/cnf.hpp"
#include "rbcount/exact_count.hpp"
#include "rbcount/experiments.hpp"
#include "rbcount/instance_io.hpp"
#include "rbcount/random.hpp"
#include "rbcount/rb_model.hpp"
#include "rbcount/theory.hpp"

#endif  // RBCOUNT_RBCOUNT_HPP
