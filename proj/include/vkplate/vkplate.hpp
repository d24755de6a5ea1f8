#pragma once

#include "vkplate/airy_vk.hpp"
#include "vkplate/config.hpp"
#include "vkplate/errors.hpp"
#include "vkplate/field_io.hpp"
#include "vkplate/grid.hpp"
#include "vkplate/plate_energy.hpp"
#include "vkplate/run.hpp"
#include "vkplate/solver.hpp"
#include "vkplate/tensor_forms.hpp"
#include "vkplate/verification.hpp"
