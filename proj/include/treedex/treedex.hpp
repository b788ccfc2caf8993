#ifndef TREEDEX_TREEDEX_HPP
#define TREEDEX_TREEDEX_HPP

#include "treedex/data_file.hpp"
#include "treedex/decompose.hpp"
#include "treedex/errors.hpp"
#include "treedex/exec.hpp"
#include "treedex/gen.hpp"
#include "treedex/index.hpp"
#include "treedex/query.hpp"
#include "treedex/subtree.hpp"
#include "treedex/tree.hpp"
#include "treedex/varint.hpp"

#endif
