#pragma once

#include "exom/common.hpp"
#include "exom/ctf_types.hpp"
#include "exom/estimators.hpp"
#include "exom/events.hpp"
#include "exom/expr.hpp"
#include "exom/graph.hpp"
#include "exom/manifest.hpp"
#include "exom/nn.hpp"
#include "exom/proposal.hpp"
#include "exom/queries.hpp"
#include "exom/scm.hpp"
#include "exom/scm_io.hpp"
#include "exom/tensor.hpp"
#include "exom/train.hpp"
#include "exom/zoo.hpp"
