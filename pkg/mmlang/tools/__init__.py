"""
Tools module initialization.
"""

# The registry_builder discovers every module here that sets
# __register_mcp_tools__ = True
