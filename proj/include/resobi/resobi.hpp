#ifndef RESOBI_RESOBI_HPP
#define RESOBI_RESOBI_HPP

#include "resobi/bench.hpp"
#include "resobi/bss.hpp"
#include "resobi/error.hpp"
#include "resobi/feat.hpp"
#include "resobi/io.hpp"
#include "resobi/matrix.hpp"
#include "resobi/numlin.hpp"
#include "resobi/pipeline.hpp"
#include "resobi/recording.hpp"
#include "resobi/rng.hpp"
#include "resobi/svm.hpp"
#include "resobi/synthgen.hpp"

#endif
