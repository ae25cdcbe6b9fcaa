#pragma once

#define MEMSAMP_VERSION_MAJOR 0
#define MEMSAMP_VERSION_MINOR 1
#define MEMSAMP_VERSION_PATCH 0
#define MEMSAMP_VERSION "0.1.0"
