#ifndef LCJM_LCJM_HPP
#define LCJM_LCJM_HPP

#include "lcjm/basis.hpp"
#include "lcjm/config.hpp"
#include "lcjm/data.hpp"
#include "lcjm/error.hpp"
#include "lcjm/harness.hpp"
#include "lcjm/io.hpp"
#include "lcjm/likelihood.hpp"
#include "lcjm/model.hpp"
#include "lcjm/pipeline.hpp"
#include "lcjm/quadrature.hpp"
#include "lcjm/random.hpp"
#include "lcjm/relabel.hpp"
#include "lcjm/sampler.hpp"
#include "lcjm/selection.hpp"
#include "lcjm/simulator.hpp"

#endif  // LCJM_LCJM_HPP
