"""Schemas Package"""
