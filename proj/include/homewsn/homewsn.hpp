// Umbrella header.
#pragma once

#include "homewsn/aggregate.hpp"
#include "homewsn/compress.hpp"
#include "homewsn/crypto.hpp"
#include "homewsn/energy.hpp"
#include "homewsn/errors.hpp"
#include "homewsn/fixed.hpp"
#include "homewsn/frame.hpp"
#include "homewsn/gateway.hpp"
#include "homewsn/http_api.hpp"
#include "homewsn/medium.hpp"
#include "homewsn/message.hpp"
#include "homewsn/node.hpp"
#include "homewsn/remote_store.hpp"
#include "homewsn/rng.hpp"
#include "homewsn/rooms.hpp"
#include "homewsn/scenario.hpp"
#include "homewsn/simulation.hpp"
#include "homewsn/store.hpp"
