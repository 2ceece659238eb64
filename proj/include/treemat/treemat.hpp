#pragma once

#include "treemat/bits.hpp"
#include "treemat/distribution.hpp"
#include "treemat/errors.hpp"
#include "treemat/flatten.hpp"
#include "treemat/fuzzy.hpp"
#include "treemat/io.hpp"
#include "treemat/matrix.hpp"
#include "treemat/traversal.hpp"
#include "treemat/tree.hpp"
