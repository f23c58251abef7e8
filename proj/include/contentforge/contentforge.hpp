#pragma once

#include <contentforge/bundle.hpp>
#include <contentforge/bundle_codec.hpp>
#include <contentforge/byte_io.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/engine.hpp>
#include <contentforge/error.hpp>
#include <contentforge/packager.hpp>
#include <contentforge/render.hpp>
#include <contentforge/search.hpp>
#include <contentforge/text_shaper.hpp>
#include <contentforge/utf8.hpp>
#include <contentforge/zip.hpp>
