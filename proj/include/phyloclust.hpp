#pragma once

#include "phyloclust/alignment.hpp"
#include "phyloclust/community.hpp"
#include "phyloclust/date.hpp"
#include "phyloclust/distance.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/evaluation.hpp"
#include "phyloclust/gap.hpp"
#include "phyloclust/growth.hpp"
#include "phyloclust/matrix_io.hpp"
#include "phyloclust/mcmc.hpp"
#include "phyloclust/metadata.hpp"
#include "phyloclust/parallel.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/phylo.hpp"
#include "phyloclust/rng.hpp"
#include "phyloclust/simulate.hpp"
#include "phyloclust/text.hpp"
#include "phyloclust/threshold.hpp"
#include "phyloclust/tree.hpp"
