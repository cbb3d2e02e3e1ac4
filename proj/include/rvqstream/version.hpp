#pragma once

#define RVQSTREAM_VERSION "1.0.0"

// File/report schema versions. Readers reject a different major version.
#define RVQSTREAM_SCHEMA_MAJOR 1
#define RVQSTREAM_SCHEMA_MINOR 0
