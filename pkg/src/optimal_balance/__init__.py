import jax

# Series coefficients and ramp derivatives are propagated in double precision.
jax.config.update("jax_enable_x64", True)
