"""Services for dominance, couplings, transport and truncations"""
