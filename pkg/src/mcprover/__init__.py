"""Inductive prover for order-sorted equational theories modulo
commutativity and associativity-commutativity axioms."""

__version__ = "0.1.0"
