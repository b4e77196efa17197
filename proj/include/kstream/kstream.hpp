#pragma once

#include "kstream/bench.hpp"
#include "kstream/bounded_queue.hpp"
#include "kstream/castle.hpp"
#include "kstream/categorizer.hpp"
#include "kstream/config.hpp"
#include "kstream/egress.hpp"
#include "kstream/errors.hpp"
#include "kstream/generalization.hpp"
#include "kstream/message.hpp"
#include "kstream/pipeline.hpp"
#include "kstream/record.hpp"
#include "kstream/reduction.hpp"
#include "kstream/transport.hpp"
