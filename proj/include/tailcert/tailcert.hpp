#pragma once

#include "tailcert/error.hpp"
#include "tailcert/numerics.hpp"
#include "tailcert/io_util.hpp"
#include "tailcert/network.hpp"
#include "tailcert/network_io.hpp"
#include "tailcert/latents.hpp"
#include "tailcert/certificates.hpp"
#include "tailcert/diffusion.hpp"
#include "tailcert/audit.hpp"
#include "tailcert/data_io.hpp"
#include "tailcert/specs.hpp"
